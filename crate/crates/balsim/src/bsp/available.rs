use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Direction, Horizon, MarketConfig, MarketKind, Minutes, ReserveKind, Series, TimeGrid, Unit,
    UnitType,
};
use crate::scalar::Scalar;

/// Power a unit can offer in each direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AvailableRange<S> {
    pub q_up_min: S,
    pub q_up_max: S,
    pub q_dn_min: S,
    pub q_dn_max: S,
}

impl<S: Scalar> AvailableRange<S> {
    pub fn zero() -> Self {
        AvailableRange {
            q_up_min: S::zero(),
            q_up_max: S::zero(),
            q_dn_min: S::zero(),
            q_dn_max: S::zero(),
        }
    }

    pub fn new(up_max: S, dn_max: S) -> Self {
        AvailableRange {
            q_up_max: up_max,
            q_dn_max: dn_max,
            ..Self::zero()
        }
        .normalized()
    }

    pub fn zero_up(&mut self) {
        self.q_up_min = S::zero();
        self.q_up_max = S::zero();
    }

    pub fn zero_dn(&mut self) {
        self.q_dn_min = S::zero();
        self.q_dn_max = S::zero();
    }

    pub fn bounds(&self, dir: Direction) -> (S, S) {
        match dir {
            Direction::Up => (self.q_up_min, self.q_up_max),
            Direction::Down => (self.q_dn_min, self.q_dn_max),
        }
    }

    pub fn set(&mut self, dir: Direction, lo: S, hi: S) {
        match dir {
            Direction::Up => {
                self.q_up_min = lo;
                self.q_up_max = hi;
            }
            Direction::Down => {
                self.q_dn_min = lo;
                self.q_dn_max = hi;
            }
        }
    }

    pub fn cap(&mut self, dir: Direction, limit: S) {
        match dir {
            Direction::Up => self.q_up_max = self.q_up_max.min(limit),
            Direction::Down => self.q_dn_max = self.q_dn_max.min(limit),
        }
    }

    pub fn has(&self, dir: Direction) -> bool {
        self.bounds(dir).1 > S::tol()
    }

    /// Clamps at zero and zeroes any direction whose maximum falls below its minimum.
    pub fn normalized(mut self) -> Self {
        for dir in [Direction::Up, Direction::Down] {
            let (lo, hi) = self.bounds(dir);
            let (lo, hi) = (lo.pos(), hi.pos());
            if hi <= S::tol() || hi < lo - S::tol() {
                self.set(dir, S::zero(), S::zero());
            } else {
                self.set(dir, lo.min(hi), hi);
            }
        }
        self
    }

    /// Range valid on every step of a block: tightest bounds of the parts.
    pub fn intersect(&self, other: &Self) -> Self {
        AvailableRange {
            q_up_min: self.q_up_min.max(other.q_up_min),
            q_up_max: self.q_up_max.min(other.q_up_max),
            q_dn_min: self.q_dn_min.max(other.q_dn_min),
            q_dn_max: self.q_dn_max.min(other.q_dn_max),
        }
        .normalized()
    }
}

/// A unit seen on one market grid, with step values sampled from its series.
///
/// Step `k` may lie outside the market frame; values there come from the
/// unit's full horizon series.
#[derive(Debug, Clone)]
pub struct UnitView<'a, S> {
    pub unit: &'a Unit<S>,
    pub horizon: &'a Horizon,
    pub grid: TimeGrid,
    pub market: MarketConfig,
}

impl<'a, S: Scalar> UnitView<'a, S> {
    pub fn new(unit: &'a Unit<S>, horizon: &'a Horizon, market: &MarketConfig) -> Result<Self> {
        Ok(UnitView {
            unit,
            horizon,
            grid: market.grid()?,
            market: *market,
        })
    }

    pub fn dt(&self) -> Minutes {
        self.grid.dt
    }

    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    pub fn time(&self, k: i64) -> Minutes {
        self.grid.time(k)
    }

    pub fn t_ex(&self) -> Minutes {
        self.market.t_ex
    }

    fn sample(&self, s: &Series<S>, k: i64) -> S {
        s.mean(self.horizon, self.time(k), self.time(k + 1))
    }

    pub fn plan(&self, k: i64) -> S {
        self.sample(&self.unit.p_plan, k)
    }

    pub fn p_min(&self, k: i64) -> S {
        self.sample(&self.unit.p_min, k)
    }

    pub fn p_max(&self, k: i64) -> S {
        self.sample(&self.unit.p_max, k)
    }

    pub fn forecast(&self, k: i64) -> S {
        self.sample(self.unit.forecast(), k)
    }

    pub fn stored(&self, k: i64) -> Option<S> {
        self.unit.e_stored.as_ref().map(|s| self.sample(s, k))
    }

    /// Largest change over one market step, `None` when unlimited.
    pub fn ramp(&self, k: i64) -> Option<S> {
        let r = self.sample(&self.unit.ramp_max, k);
        (r > S::zero()).then(|| r * S::from_int(self.dt()))
    }

    /// Ramping limit per minute at step `k`, `None` when unlimited.
    pub fn ramp_per_min(&self, k: i64) -> Option<S> {
        let r = self.sample(&self.unit.ramp_max, k);
        (r > S::zero()).then_some(r)
    }

    pub fn is_on(&self, k: i64) -> bool {
        self.plan(k) > S::tol()
    }

    pub fn is_off(&self, k: i64) -> bool {
        !self.is_on(k)
    }

    /// Whole market steps needed to cover `minutes`.
    pub fn steps_for(&self, minutes: Minutes) -> i64 {
        self.grid.steps_for(minutes)
    }

    /// Reserves procured at step `k` in one direction, excluding the product
    /// traded on the current market.
    pub fn other_reserves(&self, k: i64, dir: Direction) -> S {
        let current = current_product(self.market.market_kind);
        self.unit.reserve_sum(self.horizon, self.time(k), self.time(k + 1), dir, |kind| {
            Some(kind) != current
        })
    }

    pub fn any_reserve(&self, k: i64) -> bool {
        [Direction::Up, Direction::Down].into_iter().any(|d| {
            self.unit
                .reserve_sum(self.horizon, self.time(k), self.time(k + 1), d, |_| true)
                > S::tol()
        })
    }
}

fn current_product(kind: MarketKind) -> Option<ReserveKind> {
    match kind {
        MarketKind::Rr => Some(ReserveKind::Rr),
        MarketKind::Mfrr => Some(ReserveKind::Mfrr),
        MarketKind::Bm => None,
    }
}

/// First estimate from power bounds and plans.
///
/// Loads follow the signed convention: a flexible load moves within
/// `[-|p_for|, 0]`, so reducing consumption is upward and increasing it is downward.
pub fn initial_available_power<S: Scalar>(view: &UnitView<S>, k: i64) -> AvailableRange<S> {
    let plan = view.plan(k);
    match view.unit.unit_type {
        UnitType::Thermal | UnitType::Hydraulic | UnitType::Storage | UnitType::PhsStorage => {
            AvailableRange::new(view.p_max(k) - plan, plan - view.p_min(k))
        }
        UnitType::Wind | UnitType::Pv => {
            let f = view.forecast(k);
            AvailableRange::new(f - plan, plan - f * view.unit.curtailment_ratio)
        }
        UnitType::FlexibleLoad => {
            let f = view.forecast(k).abs();
            AvailableRange::new(-plan, f - plan.abs())
        }
        UnitType::NondispatchableLoad => AvailableRange::zero(),
    }
}

/// Removes capacity already committed to other reserve products.
pub fn subtract_reserves<S: Scalar>(
    range: AvailableRange<S>,
    view: &UnitView<S>,
    k: i64,
) -> AvailableRange<S> {
    let mut r = range;
    r.q_up_max = r.q_up_max - view.other_reserves(k, Direction::Up);
    r.q_dn_max = r.q_dn_max - view.other_reserves(k, Direction::Down);
    r.normalized()
}

/// Zeroes everything when the unit cannot be notified before `t_first`.
pub fn apply_notice_delay<S: Scalar>(
    range: AvailableRange<S>,
    view: &UnitView<S>,
    t_first: Minutes,
) -> AvailableRange<S> {
    if t_first - view.t_ex() < view.unit.d_notice {
        AvailableRange::zero()
    } else {
        range
    }
}

/// Available range of a single market step after the general constraints.
pub fn step_range<S: Scalar>(view: &UnitView<S>, k: usize) -> AvailableRange<S> {
    let k = k as i64;
    let r = subtract_reserves(initial_available_power(view, k), view, k);
    apply_notice_delay(r, view, view.time(k))
}

/// Steps on which a thermal unit may be offered for shutdown: running at or
/// above its minimum power with no procured reserve.
pub fn shutdown_availability<S: Scalar>(view: &UnitView<S>) -> Result<Vec<bool>> {
    if view.unit.unit_type != UnitType::Thermal {
        return Err(Error::InvalidUnitType {
            unit: view.unit.id.clone(),
            found: view.unit.unit_type.name().to_string(),
            expected: "thermal",
        });
    }
    Ok((0..view.len() as i64)
        .map(|k| {
            let p = view.plan(k);
            p > S::tol() && p >= view.p_min(k) - S::tol() && !view.any_reserve(k)
        })
        .collect())
}
