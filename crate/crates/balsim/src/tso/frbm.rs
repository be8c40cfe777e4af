use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::alternative::AlternativeCost;
use crate::bm::{build_problem, solve};
use crate::model::{ControlArea, GlobalParams, Horizon, MarketConfig, Minutes, Scenario, Series, Unit, UnitType};
use crate::scalar::Scalar;

/// Attempts at drawing a thermal subset inside the tolerance band.
const DRAWS: usize = 64;
/// Half-width of the capacity band around `rho`.
const BAND: f64 = 0.1;

/// Units kept aside for the local balancing process.
#[derive(Debug, Clone, PartialEq)]
pub struct FrbmPool<S> {
    pub units: Vec<Unit<S>>,
}

impl<S: Scalar> FrbmPool<S> {
    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.units.iter().map(|u| u.id.as_str()).collect()
    }
}

fn capacity<S: Scalar>(u: &Unit<S>, h: &Horizon, market: &MarketConfig) -> S {
    u.p_max.mean(h, market.t_start, market.t_end)
}

/// Draws a subset whose capacity share lies within `rho +- 0.1`.
///
/// Units are added in a random order, skipping those that would overshoot the
/// band. Falls back to the closest subset seen when no draw lands in the band.
fn draw_group<S: Scalar>(caps: &[S], rho: S, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let total = caps.iter().copied().fold(S::zero(), |a, b| a + b);
    if total <= S::zero() {
        return Vec::new();
    }
    let lo = (rho - S::lit(BAND)) * total;
    let hi = (rho + S::lit(BAND)) * total;
    let target = rho * total;
    let mut best: Option<(S, Vec<usize>)> = None;
    for _ in 0..DRAWS {
        let mut order: Vec<usize> = (0..caps.len()).collect();
        order.shuffle(rng);
        let mut picked = Vec::new();
        let mut sum = S::zero();
        for i in order {
            if sum >= lo - S::tol() {
                break;
            }
            if sum + caps[i] <= hi + S::tol() {
                picked.push(i);
                sum = sum + caps[i];
            }
        }
        if sum >= lo - S::tol() && sum <= hi + S::tol() {
            picked.sort_unstable();
            return picked;
        }
        let gap = (sum - target).abs();
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            picked.sort_unstable();
            best = Some((gap, picked));
        }
    }
    best.map(|(_, p)| p).unwrap_or_default()
}

/// Scales a reservoir unit's flexibility around its plan by `rho`.
fn scaled<S: Scalar>(u: &Unit<S>, rho: S, h: &Horizon) -> Unit<S> {
    let mut out = u.clone();
    let plan = u.p_plan.values(h);
    let scale = |s: &Series<S>| -> Series<S> {
        Series::Values(s.values(h).iter().zip(&plan).map(|(&b, &p)| p + rho * (b - p)).collect())
    };
    out.p_max = scale(&u.p_max);
    out.p_min = scale(&u.p_min);
    out
}

/// Selects the units available to the local process for one control area.
///
/// Thermal units are drawn per fuel group; reservoir units all take part with
/// a share `rho` of their flexibility. Other units are left out.
pub fn select_frbm_pool<S: Scalar>(
    sc: &Scenario<S>,
    ca: &ControlArea<S>,
    market: &MarketConfig,
    rho: S,
    seed: u64,
) -> FrbmPool<S> {
    let h = sc.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut units: Vec<&Unit<S>> = sc.units_in(ca).collect();
    units.sort_by(|a, b| a.id.cmp(&b.id));
    let mut groups: BTreeMap<&str, Vec<&Unit<S>>> = BTreeMap::new();
    let mut pool = Vec::new();
    for u in &units {
        match u.unit_type {
            UnitType::Thermal => groups.entry(u.fuel.as_deref().unwrap_or("")).or_default().push(u),
            t if t.is_reservoir() && rho > S::zero() => pool.push(scaled(u, rho, h)),
            _ => {}
        }
    }
    for members in groups.values() {
        let caps: Vec<S> = members.iter().map(|u| capacity(u, h, market)).collect();
        for i in draw_group(&caps, rho, &mut rng) {
            pool.push(members[i].clone());
        }
    }
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    FrbmPool { units: pool }
}

/// Local balancing process used as the alternative: the cost of a need is the
/// balancing mechanism cost of covering it with the pooled units, per hour.
#[derive(Debug, Clone)]
pub struct FrbmAlternative<S> {
    pub pool: FrbmPool<S>,
    pub horizon: Horizon,
    pub global: GlobalParams<S>,
    pub market: MarketConfig,
    cache: BTreeMap<(Minutes, u64), Option<S>>,
}

impl<S: Scalar> FrbmAlternative<S> {
    pub fn new(pool: FrbmPool<S>, horizon: Horizon, global: GlobalParams<S>, market: MarketConfig) -> Self {
        FrbmAlternative {
            pool,
            horizon,
            global,
            market,
            cache: BTreeMap::new(),
        }
    }

    fn evaluate(&self, q: S, t: Minutes) -> Option<S> {
        if self.pool.is_empty() {
            return None;
        }
        let dt = self.market.dt_minutes;
        let frame = MarketConfig::bm(self.market.t_ex, t, t + dt, dt);
        let units: Vec<&Unit<S>> = self.pool.units.iter().collect();
        let p = build_problem(&units, &self.horizon, &frame, &[q], &self.global).ok()?;
        let r = solve(&p).ok()?;
        let cost = r.total_cost.iter().copied().fold(S::zero(), |a, b| a + b);
        Some(cost * S::lit(60.0) / S::from_int(dt))
    }
}

impl<S: Scalar> AlternativeCost<S> for FrbmAlternative<S> {
    fn cost(&mut self, q: S, t: Minutes) -> Option<S> {
        let key = (t, q.to_f64_lossy().to_bits());
        if let Some(c) = self.cache.get(&key) {
            return *c;
        }
        let c = self.evaluate(q, t);
        self.cache.insert(key, c);
        c
    }
}
