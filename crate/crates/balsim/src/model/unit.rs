use serde::{Deserialize, Serialize};

use super::time::{Horizon, Minutes, Series};
use crate::scalar::{one, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitType {
    Thermal,
    Hydraulic,
    Storage,
    PhsStorage,
    Wind,
    Pv,
    FlexibleLoad,
    NondispatchableLoad,
}

impl UnitType {
    pub fn is_storage(self) -> bool {
        matches!(self, UnitType::Storage | UnitType::PhsStorage)
    }

    /// Units whose orders are formulated step by step rather than on indexes.
    pub fn is_reservoir(self) -> bool {
        matches!(self, UnitType::Hydraulic | UnitType::Storage | UnitType::PhsStorage)
    }

    pub fn is_load(self) -> bool {
        matches!(self, UnitType::FlexibleLoad | UnitType::NondispatchableLoad)
    }

    pub fn is_renewable(self) -> bool {
        matches!(self, UnitType::Wind | UnitType::Pv)
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitType::Thermal => "thermal",
            UnitType::Hydraulic => "hydraulic",
            UnitType::Storage => "storage",
            UnitType::PhsStorage => "phs_storage",
            UnitType::Wind => "wind",
            UnitType::Pv => "pv",
            UnitType::FlexibleLoad => "flexible_load",
            UnitType::NondispatchableLoad => "nondispatchable_load",
        }
    }
}

/// Reserve product a capacity was procured for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReserveKind {
    #[serde(rename = "FCR")]
    Fcr,
    #[serde(rename = "aFRR")]
    Afrr,
    #[serde(rename = "mFRR")]
    Mfrr,
    #[serde(rename = "RR")]
    Rr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// Capacity already procured for one reserve product and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Reserve<S> {
    pub kind: ReserveKind,
    pub direction: Direction,
    pub values: Series<S>,
}

/// Water values indexed by time and stored energy; `values[i][j]` belongs to
/// `times[i]` and `levels[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct WaterValueTable<S> {
    pub times: Vec<Minutes>,
    pub levels: Vec<S>,
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> WaterValueTable<S> {
    /// Bilinear interpolation, clamped at the table edges.
    pub fn value(&self, t: Minutes, level: S) -> S {
        let (i0, i1, wt) = bracket(
            &self.times.iter().map(|&x| S::from_int(x)).collect::<Vec<_>>(),
            S::from_int(t),
        );
        let (j0, j1, wl) = bracket(&self.levels, level);
        let row = |i: usize| {
            let r = &self.values[i];
            r[j0] + (r[j1] - r[j0]) * wl
        };
        let a = row(i0);
        let b = row(i1);
        a + (b - a) * wt
    }
}

fn bracket<S: Scalar>(axis: &[S], x: S) -> (usize, usize, S) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0, S::zero());
    }
    if x >= axis[n - 1] {
        return (n - 1, n - 1, S::zero());
    }
    let hi = axis.iter().position(|&a| a > x).unwrap_or(n - 1);
    let lo = hi - 1;
    (lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo]))
}

/// A generation or consumption asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Unit<S> {
    pub id: String,
    pub unit_type: UnitType,
    pub area_id: String,
    #[serde(default)]
    pub portfolio_id: String,
    /// Fuel group used when drawing a balancing mechanism pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel: Option<String>,
    pub p_max: Series<S>,
    #[serde(default)]
    pub p_min: Series<S>,
    pub p_plan: Series<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_forecast: Option<Series<S>>,
    /// MW per minute; zero means unlimited.
    #[serde(default)]
    pub ramp_max: Series<S>,
    #[serde(default)]
    pub c_var: S,
    #[serde(default)]
    pub c_su: S,
    #[serde(default)]
    pub d_notice: Minutes,
    #[serde(default)]
    pub d_su: Minutes,
    #[serde(default)]
    pub d_sd: Minutes,
    #[serde(default)]
    pub d_min_on: Minutes,
    #[serde(default)]
    pub d_min_off: Minutes,
    #[serde(default)]
    pub d_min_stable: Minutes,
    #[serde(default)]
    pub d_tran: Minutes,
    #[serde(default)]
    pub curtailment_ratio: S,
    #[serde(default)]
    pub reserves: Vec<Reserve<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_stored: Option<Series<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_min: Option<Series<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_max: Option<Series<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub water_values: Option<WaterValueTable<S>>,
    /// Seven price spreads around the water value, one per power fragment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spreads: Option<Vec<S>>,
    #[serde(default = "one")]
    pub charge_eff: S,
    #[serde(default = "one")]
    pub discharge_eff: S,
}

impl<S: Scalar> Unit<S> {
    /// A unit with the given type and constant bounds, everything else defaulted.
    pub fn new(id: &str, unit_type: UnitType, area_id: &str, p_min: S, p_max: S, plan: S) -> Self {
        Unit {
            id: id.to_string(),
            unit_type,
            area_id: area_id.to_string(),
            portfolio_id: String::new(),
            fuel: None,
            p_max: Series::Const(p_max),
            p_min: Series::Const(p_min),
            p_plan: Series::Const(plan),
            p_forecast: None,
            ramp_max: Series::Const(S::zero()),
            c_var: S::zero(),
            c_su: S::zero(),
            d_notice: 0,
            d_su: 0,
            d_sd: 0,
            d_min_on: 0,
            d_min_off: 0,
            d_min_stable: 0,
            d_tran: 0,
            curtailment_ratio: S::zero(),
            reserves: Vec::new(),
            e_stored: None,
            e_min: None,
            e_max: None,
            water_values: None,
            spreads: None,
            charge_eff: S::one(),
            discharge_eff: S::one(),
        }
    }

    /// Forecast series, falling back to the plan when none is given.
    pub fn forecast(&self) -> &Series<S> {
        self.p_forecast.as_ref().unwrap_or(&self.p_plan)
    }

    /// Mean reserve over `[t0, t1)` in one direction, summed over the kinds `keep` accepts.
    pub fn reserve_sum(
        &self,
        h: &Horizon,
        t0: Minutes,
        t1: Minutes,
        dir: Direction,
        keep: impl Fn(ReserveKind) -> bool,
    ) -> S {
        self.reserves
            .iter()
            .filter(|r| r.direction == dir && keep(r.kind))
            .map(|r| r.values.mean(h, t0, t1))
            .fold(S::zero(), |a, b| a + b)
    }

    pub fn portfolio(&self) -> &str {
        if self.portfolio_id.is_empty() {
            &self.id
        } else {
            &self.portfolio_id
        }
    }
}
