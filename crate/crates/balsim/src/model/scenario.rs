use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::time::{Horizon, Minutes, Series, TimeGrid};
use super::unit::{Unit, UnitType};
use crate::error::{Error, Result, Violation};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarketKind {
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "mFRR")]
    Mfrr,
    #[serde(rename = "BM")]
    Bm,
}

impl MarketKind {
    pub fn name(self) -> &'static str {
        match self {
            MarketKind::Rr => "RR",
            MarketKind::Mfrr => "mFRR",
            MarketKind::Bm => "BM",
        }
    }
}

/// Timing of one market session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub market_kind: MarketKind,
    /// Time at which clearing results are known to the actors.
    pub t_ex: Minutes,
    pub t_start: Minutes,
    pub t_end: Minutes,
    pub dt_minutes: Minutes,
    pub gct_bsp_offset_min: Minutes,
    pub gct_tso_offset_min: Minutes,
}

impl MarketConfig {
    /// Hourly RR session: results 30 min ahead, BSP gate 55 min, TSO gate 40 min.
    pub fn rr(t_start: Minutes) -> Self {
        MarketConfig {
            market_kind: MarketKind::Rr,
            t_ex: t_start - 30,
            t_start,
            t_end: t_start + 60,
            dt_minutes: 60,
            gct_bsp_offset_min: 55,
            gct_tso_offset_min: 40,
        }
    }

    /// Quarter-hourly mFRR session. Results arrive 7.5 min ahead; on the
    /// minute grid this is rounded to 7 so lead times are never overstated.
    pub fn mfrr(t_start: Minutes) -> Self {
        MarketConfig {
            market_kind: MarketKind::Mfrr,
            t_ex: t_start - 7,
            t_start,
            t_end: t_start + 15,
            dt_minutes: 15,
            gct_bsp_offset_min: 25,
            gct_tso_offset_min: 10,
        }
    }

    pub fn bm(t_ex: Minutes, t_start: Minutes, t_end: Minutes, dt: Minutes) -> Self {
        MarketConfig {
            market_kind: MarketKind::Bm,
            t_ex,
            t_start,
            t_end,
            dt_minutes: dt,
            gct_bsp_offset_min: 0,
            gct_tso_offset_min: 0,
        }
    }

    pub fn for_kind(kind: MarketKind, t_start: Minutes) -> Self {
        match kind {
            MarketKind::Rr => Self::rr(t_start),
            MarketKind::Mfrr => Self::mfrr(t_start),
            MarketKind::Bm => Self::bm(t_start, t_start, t_start + 60, 60),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_start, self.t_end, self.dt_minutes)
    }
}

/// One band of the day-ahead to mFRR price ratio table, valid from `lower` MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RatioBand<S> {
    pub lower: S,
    pub down: S,
    pub up: S,
}

/// Banded ratio between the day-ahead price and the expected mFRR price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RatioTable<S> {
    pub bands: Vec<RatioBand<S>>,
}

impl<S: Scalar> Default for RatioTable<S> {
    /// French reference table.
    fn default() -> Self {
        let rows = [
            (0.0, 0.81, 1.28),
            (300.0, 0.76, 1.33),
            (600.0, 0.73, 1.36),
            (900.0, 0.7, 1.37),
            (1200.0, 0.7, 1.38),
            (1500.0, 0.59, 1.47),
        ];
        RatioTable {
            bands: rows
                .iter()
                .map(|&(lower, down, up)| RatioBand {
                    lower: S::lit(lower),
                    down: S::lit(down),
                    up: S::lit(up),
                })
                .collect(),
        }
    }
}

impl<S: Scalar> RatioTable<S> {
    /// Band containing `volume` (MW); each band includes its lower bound.
    pub fn band(&self, volume: S) -> &RatioBand<S> {
        let v = volume.abs();
        self.bands
            .iter()
            .rev()
            .find(|b| v >= b.lower)
            .unwrap_or(&self.bands[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AltKind {
    #[serde(rename = "mFRRalt")]
    Mfrr,
    #[serde(rename = "FrBMalt")]
    Frbm,
}

/// A forecast-error quantile: with probability `alpha` the error is below `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Quantile<S> {
    pub alpha: S,
    pub epsilon: Series<S>,
}

/// Bidding parameters of a TSO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TsoParams<S> {
    /// Use forecasts (true) or plans (false) for loads and renewables.
    #[serde(default)]
    pub delta_for: bool,
    #[serde(default)]
    pub delta_elas: bool,
    #[serde(default = "default_alt")]
    pub alt: AltKind,
    #[serde(default = "default_slice")]
    pub v_slice: S,
    #[serde(default)]
    pub delta_risk: bool,
    /// Ordered quantiles; the first and last entries are the `alpha_min` and
    /// `alpha_max` sentinels used only for interpolation.
    #[serde(default)]
    pub quantiles: Vec<Quantile<S>>,
    #[serde(default = "default_rho")]
    pub rho_frbm: S,
    #[serde(default)]
    pub ratio_table: RatioTable<S>,
}

fn default_alt() -> AltKind {
    AltKind::Mfrr
}

fn default_slice<S: Scalar>() -> S {
    S::lit(100.0)
}

fn default_rho<S: Scalar>() -> S {
    S::lit(0.5)
}

impl<S: Scalar> Default for TsoParams<S> {
    fn default() -> Self {
        TsoParams {
            delta_for: false,
            delta_elas: false,
            alt: AltKind::Mfrr,
            v_slice: default_slice(),
            delta_risk: false,
            quantiles: Vec::new(),
            rho_frbm: default_rho(),
            ratio_table: RatioTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ControlArea<S> {
    pub id: String,
    pub market_area_ids: Vec<String>,
    #[serde(default)]
    pub tso_params: TsoParams<S>,
    /// Exports minus imports per market area.
    #[serde(default)]
    pub commercial_balance: BTreeMap<String, Series<S>>,
    /// Day-ahead price used by the mFRR alternative.
    #[serde(default)]
    pub day_ahead_price: Series<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct GlobalParams<S> {
    #[serde(default = "default_voll")]
    pub voll: S,
    #[serde(default)]
    pub p_spill: S,
    #[serde(default = "default_redispatch")]
    pub p_redispatch: S,
    /// Hour of day at which the day-ahead market is executed.
    #[serde(default = "default_h_da")]
    pub h_da_ex: u32,
    #[serde(default = "default_cap")]
    pub price_cap: S,
}

fn default_voll<S: Scalar>() -> S {
    S::lit(26000.0)
}

fn default_redispatch<S: Scalar>() -> S {
    S::lit(5000.0)
}

fn default_h_da() -> u32 {
    12
}

fn default_cap<S: Scalar>() -> S {
    S::lit(10000.0)
}

impl<S: Scalar> Default for GlobalParams<S> {
    fn default() -> Self {
        GlobalParams {
            voll: default_voll(),
            p_spill: S::zero(),
            p_redispatch: default_redispatch(),
            h_da_ex: default_h_da(),
            price_cap: default_cap(),
        }
    }
}

/// Balancing mechanism frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BmFrame {
    pub t_ex: Minutes,
    pub t_start: Minutes,
    pub t_end: Minutes,
    pub dt: Minutes,
}

impl BmFrame {
    pub fn market(&self) -> MarketConfig {
        MarketConfig::bm(self.t_ex, self.t_start, self.t_end, self.dt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub horizon: Horizon,
    /// Start of the balancing market session.
    pub market_start: Minutes,
    /// Optional step override for the market session (e.g. 15-minute RR steps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market_dt: Option<Minutes>,
    #[serde(default = "default_true")]
    pub combinatorial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bm: Option<BmFrame>,
}

fn default_true() -> bool {
    true
}

impl ScenarioConfig {
    pub fn market(&self, kind: MarketKind) -> MarketConfig {
        let mut m = MarketConfig::for_kind(kind, self.market_start);
        if let Some(dt) = self.market_dt {
            m.dt_minutes = dt;
        }
        m
    }
}

/// A complete simulation dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Scenario<S> {
    pub config: ScenarioConfig,
    #[serde(default)]
    pub global_params: GlobalParams<S>,
    pub control_areas: Vec<ControlArea<S>>,
    #[serde(default)]
    pub units: Vec<Unit<S>>,
}

impl<S: Scalar> Scenario<S> {
    pub fn horizon(&self) -> &Horizon {
        &self.config.horizon
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Control area owning a market area.
    pub fn control_area_of(&self, area_id: &str) -> Option<&ControlArea<S>> {
        self.control_areas
            .iter()
            .find(|ca| ca.market_area_ids.iter().any(|a| a == area_id))
    }

    pub fn units_in<'a>(&'a self, ca: &'a ControlArea<S>) -> impl Iterator<Item = &'a Unit<S>> + 'a {
        self.units
            .iter()
            .filter(move |u| ca.market_area_ids.contains(&u.area_id))
    }

    pub fn unit(&self, id: &str) -> Option<&Unit<S>> {
        self.units.iter().find(|u| u.id == id)
    }

    /// Checks every dataset invariant and returns all violations found.
    pub fn violations(&self) -> Vec<Violation> {
        validate_dataset(self)
    }

    pub fn validated(self) -> Result<Self> {
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// Validates a scenario; an empty result means the dataset is usable.
pub fn validate_dataset<S: Scalar>(sc: &Scenario<S>) -> Vec<Violation> {
    let mut out = Vec::new();
    let h = sc.horizon();
    if h.dt <= 0 || h.len == 0 {
        out.push(Violation::new("config.horizon", "horizon needs a positive step and length"));
        return out;
    }
    let market = sc.config.market(MarketKind::Rr);
    if let Some(dt) = sc.config.market_dt {
        if dt <= 0 || 60 % dt != 0 {
            out.push(Violation::new("config.market_dt", "market step must divide 60 minutes"));
        }
    }
    if market.grid().is_err() {
        out.push(Violation::new("config.market_start", "market frame is not a valid grid"));
    }
    if let Some(bm) = &sc.config.bm {
        if TimeGrid::new(bm.t_start, bm.t_end, bm.dt).is_err() {
            out.push(Violation::new("config.bm", "balancing mechanism frame is not a valid grid"));
        }
    }
    let g = &sc.global_params;
    if !(g.price_cap > S::zero()) {
        out.push(Violation::new("global_params.price_cap", "price cap must be positive"));
    }
    if !(g.voll > S::zero()) || !(g.p_redispatch > S::zero()) {
        out.push(Violation::new("global_params", "penalties must be positive"));
    }
    if g.h_da_ex > 23 {
        out.push(Violation::new("global_params.h_da_ex", "hour of day out of range"));
    }

    let mut areas = BTreeMap::new();
    let mut ca_ids = BTreeSet::new();
    for (i, ca) in sc.control_areas.iter().enumerate() {
        let path = format!("control_areas[{i}]");
        if !ca_ids.insert(ca.id.as_str()) {
            out.push(Violation::new(&path, "duplicate control area id"));
        }
        for a in &ca.market_area_ids {
            if areas.insert(a.as_str(), i).is_some() {
                out.push(Violation::new(&path, format!("market area {a} belongs to two control areas")));
            }
        }
        for z in ca.commercial_balance.keys() {
            if !ca.market_area_ids.contains(z) {
                out.push(Violation::new(&path, format!("balance for foreign market area {z}")));
            }
        }
        let p = &ca.tso_params;
        if !(p.v_slice > S::zero()) {
            out.push(Violation::new(format!("{path}.tso_params.v_slice"), "slice volume must be positive"));
        }
        if !(p.rho_frbm >= S::zero() && p.rho_frbm <= S::one()) {
            out.push(Violation::new(format!("{path}.tso_params.rho_frbm"), "rho must lie in [0,1]"));
        }
        if p.delta_risk && p.quantiles.len() < 4 {
            out.push(Violation::new(
                format!("{path}.tso_params.quantiles"),
                "risk-averse bidding needs two sentinels and at least two quantiles",
            ));
        }
        for (k, w) in p.quantiles.windows(2).enumerate() {
            if !(w[1].alpha > w[0].alpha) {
                out.push(Violation::new(
                    format!("{path}.tso_params.quantiles[{}]", k + 1),
                    "quantile alphas must increase strictly",
                ));
            }
            let a = w[0].epsilon.values(h);
            let b = w[1].epsilon.values(h);
            if a.iter().zip(&b).any(|(x, y)| !(y > x)) {
                out.push(Violation::new(
                    format!("{path}.tso_params.quantiles[{}]", k + 1),
                    "quantile epsilons must increase strictly",
                ));
            }
        }
        if p.ratio_table.bands.is_empty() {
            out.push(Violation::new(format!("{path}.tso_params.ratio_table"), "ratio table is empty"));
        }
    }

    let mut ids = BTreeSet::new();
    for (i, u) in sc.units.iter().enumerate() {
        let path = format!("units[{i}]");
        if !ids.insert(u.id.as_str()) {
            out.push(Violation::new(&path, "duplicate unit id"));
        }
        if !areas.contains_key(u.area_id.as_str()) {
            out.push(Violation::new(format!("{path}.area_id"), "dangling area reference"));
        }
        let mut series = vec![("p_max", &u.p_max), ("p_min", &u.p_min), ("p_plan", &u.p_plan), ("ramp_max", &u.ramp_max)];
        if let Some(f) = &u.p_forecast {
            series.push(("p_forecast", f));
        }
        for (name, s) in [("e_stored", &u.e_stored), ("e_min", &u.e_min), ("e_max", &u.e_max)] {
            if let Some(s) = s {
                series.push((name, s));
            }
        }
        for (name, s) in &series {
            if !s.len_matches(h) {
                out.push(Violation::new(format!("{path}.{name}"), "series length differs from horizon"));
            }
            if s.iter_values().any(|v| !v.is_finite()) {
                out.push(Violation::new(format!("{path}.{name}"), "series contains a non-finite value"));
            }
        }
        let pmin = u.p_min.values(h);
        let pmax = u.p_max.values(h);
        if pmin.iter().zip(&pmax).any(|(a, b)| a > b) {
            out.push(Violation::new(format!("{path}.p_min"), "p_min exceeds p_max"));
        }
        if u.ramp_max.iter_values().any(|v| v < S::zero()) {
            out.push(Violation::new(format!("{path}.ramp_max"), "ramping limit must be non-negative"));
        }
        for (k, r) in u.reserves.iter().enumerate() {
            if !r.values.len_matches(h) || r.values.iter_values().any(|v| v < S::zero()) {
                out.push(Violation::new(format!("{path}.reserves[{k}]"), "reserves must be non-negative horizon series"));
            }
        }
        if !(u.curtailment_ratio >= S::zero() && u.curtailment_ratio <= S::one()) {
            out.push(Violation::new(format!("{path}.curtailment_ratio"), "curtailment ratio must lie in [0,1]"));
        }
        let durations = [u.d_notice, u.d_su, u.d_sd, u.d_min_on, u.d_min_off, u.d_min_stable, u.d_tran];
        if durations.iter().any(|&d| d < 0) {
            out.push(Violation::new(&path, "durations must be non-negative"));
        }
        for (name, eff) in [("charge_eff", u.charge_eff), ("discharge_eff", u.discharge_eff)] {
            if !(eff > S::zero() && eff <= S::one()) {
                out.push(Violation::new(format!("{path}.{name}"), "efficiency must lie in (0,1]"));
            }
        }
        if let (Some(e), Some(lo), Some(hi)) = (&u.e_stored, &u.e_min, &u.e_max) {
            let (e, lo, hi) = (e.values(h), lo.values(h), hi.values(h));
            if (0..h.len).any(|k| lo[k] > e[k] + S::tol() || e[k] > hi[k] + S::tol()) {
                out.push(Violation::new(format!("{path}.e_stored"), "stored energy outside [e_min, e_max]"));
            }
        }
        if let Some(sp) = &u.spreads {
            if sp.len() != 7 {
                out.push(Violation::new(format!("{path}.spreads"), "exactly seven spreads are required"));
            }
        }
        if let Some(wv) = &u.water_values {
            let ok = !wv.times.is_empty()
                && !wv.levels.is_empty()
                && wv.values.len() == wv.times.len()
                && wv.values.iter().all(|r| r.len() == wv.levels.len())
                && wv.times.windows(2).all(|w| w[1] > w[0])
                && wv.levels.windows(2).all(|w| w[1] > w[0]);
            if !ok {
                out.push(Violation::new(format!("{path}.water_values"), "malformed water value table"));
            }
        }
        if u.unit_type == UnitType::Hydraulic && u.water_values.is_none() {
            out.push(Violation::new(format!("{path}.water_values"), "hydraulic unit needs a water value table"));
        }
    }
    out
}
