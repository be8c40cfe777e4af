//! Balancing mechanism: minimum-cost activation of units around their plans
//! to cover a control area's needs over a short frame.

use serde::{Deserialize, Serialize};

use crate::bsp::UnitView;
use crate::error::{Error, Result};
use crate::model::{ControlArea, Direction, GlobalParams, Horizon, MarketConfig, Minutes, ReserveKind, Scenario, TimeGrid, Unit, UnitType};
use crate::scalar::Scalar;
use crate::solver::{Cmp, Milp};
use crate::tso::raw_needs;

/// Penalty applied to spilled energy inside the optimisation.
pub const SPILL_PENALTY: f64 = 26000.0;

/// Needs over the frame: consumption minus generation plus commercial balance, uncapped.
pub fn bm_needs<S: Scalar>(sc: &Scenario<S>, ca: &ControlArea<S>, frame: &TimeGrid) -> Vec<S> {
    raw_needs(sc, ca, frame, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BmStorage<S> {
    pub e_plan: Vec<S>,
    pub e_min: Vec<S>,
    pub e_max: Vec<S>,
    pub charge_eff: S,
    pub discharge_eff: S,
    /// One operating mode for the whole frame (PHS that cannot switch).
    pub single_mode: bool,
}

/// One unit as seen by the activation problem; all vectors follow the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BmUnit<S> {
    pub id: String,
    pub price: Vec<S>,
    pub plan: Vec<S>,
    /// Bounds on the final output.
    pub lo: Vec<S>,
    pub hi: Vec<S>,
    /// Largest change of the final output between consecutive steps.
    pub ramp: Option<Vec<S>>,
    pub frozen: Vec<bool>,
    pub storage: Option<BmStorage<S>>,
}

impl<S: Scalar> BmUnit<S> {
    fn up_cap(&self, k: usize) -> S {
        if self.frozen[k] {
            S::zero()
        } else {
            (self.hi[k] - self.plan[k]).pos()
        }
    }

    fn dn_cap(&self, k: usize) -> S {
        if self.frozen[k] {
            S::zero()
        } else {
            (self.plan[k] - self.lo[k]).pos()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BmProblem<S> {
    pub times: Vec<Minutes>,
    pub dt: Minutes,
    pub bn: Vec<S>,
    pub units: Vec<BmUnit<S>>,
    pub voll: S,
    pub p_spill: S,
    pub p_redispatch: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BmResult<S> {
    pub times: Vec<Minutes>,
    pub unit_ids: Vec<String>,
    pub p_act: Vec<Vec<S>>,
    pub p_final: Vec<Vec<S>>,
    pub e_voll: Vec<S>,
    pub e_spill: Vec<S>,
    pub objective: S,
    pub total_cost: Vec<S>,
}

fn sum_step<S: Scalar>(v: &UnitView<'_, S>, k: i64, dir: Direction) -> S {
    v.unit.reserve_sum(v.horizon, v.time(k), v.time(k + 1), dir, |r| {
        matches!(r, ReserveKind::Afrr | ReserveKind::Fcr)
    })
}

/// Activation data of one unit over the frame.
pub fn bm_unit<S: Scalar>(unit: &Unit<S>, horizon: &Horizon, frame: &MarketConfig) -> Result<BmUnit<S>> {
    let v = UnitView::new(unit, horizon, frame)?;
    let n = v.len();
    let ks = 0..n as i64;
    let plan: Vec<S> = ks.clone().map(|k| v.plan(k)).collect();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut frozen = Vec::with_capacity(n);
    for k in ks.clone() {
        let p = plan[k as usize];
        let (l, h) = match unit.unit_type {
            UnitType::Wind | UnitType::Pv => (S::zero(), v.forecast(k)),
            UnitType::FlexibleLoad => (-v.forecast(k).abs(), S::zero()),
            UnitType::NondispatchableLoad => (p, p),
            _ => (
                v.p_min(k) + sum_step(&v, k, Direction::Down),
                v.p_max(k) - sum_step(&v, k, Direction::Up),
            ),
        };
        // Keeping the plan feasible guarantees a feasible problem.
        lo.push(l.min(p));
        hi.push(h.max(p));
        let notice = v.time(k) - frame.t_ex < unit.d_notice;
        let off_thermal = unit.unit_type == UnitType::Thermal && !v.is_on(k);
        frozen.push(notice || off_thermal || unit.unit_type == UnitType::NondispatchableLoad);
    }
    let ramp = matches!(unit.unit_type, UnitType::Thermal | UnitType::Hydraulic)
        .then(|| {
            ks.clone()
                .map(|k| v.ramp(k).map(|r| r.max((v.plan(k + 1) - v.plan(k)).abs())))
                .collect::<Option<Vec<S>>>()
        })
        .flatten();
    let storage = if unit.unit_type.is_storage() {
        let e_plan: Vec<S> = ks.clone().map(|k| v.stored(k).unwrap_or(S::zero())).collect();
        let sample = |s: &Option<crate::model::Series<S>>, k: i64, e: S, pick: fn(S, S) -> S| {
            s.as_ref()
                .map(|s| pick(s.mean(horizon, v.time(k), v.time(k + 1)), e))
                .unwrap_or(e)
        };
        let e_min = ks.clone().map(|k| sample(&unit.e_min, k, e_plan[k as usize], S::min)).collect();
        let e_max = ks.clone().map(|k| sample(&unit.e_max, k, e_plan[k as usize], S::max)).collect();
        let mut single_mode = false;
        if unit.unit_type == UnitType::PhsStorage && unit.d_tran >= frame.dt_minutes {
            let min = plan.iter().copied().fold(S::infinity(), S::min);
            let max = plan.iter().copied().fold(S::neg_infinity(), S::max);
            if min < S::zero() && max > S::zero() {
                frozen.iter_mut().for_each(|f| *f = true);
            } else if max > S::zero() {
                lo.iter_mut().for_each(|l| *l = l.max(S::zero()));
            } else if min < S::zero() {
                hi.iter_mut().for_each(|h| *h = h.min(S::zero()));
            } else {
                single_mode = true;
            }
        }
        if unit.e_stored.is_none() {
            None
        } else {
            Some(BmStorage {
                e_plan,
                e_min,
                e_max,
                charge_eff: unit.charge_eff,
                discharge_eff: unit.discharge_eff,
                single_mode,
            })
        }
    } else {
        None
    };
    Ok(BmUnit {
        id: unit.id.clone(),
        price: vec![unit.c_var; n],
        plan,
        lo,
        hi,
        ramp,
        frozen,
        storage,
    })
}

/// Assembles the activation problem for a set of units.
pub fn build_problem<S: Scalar>(
    units: &[&Unit<S>],
    horizon: &Horizon,
    frame: &MarketConfig,
    bn: &[S],
    global: &GlobalParams<S>,
) -> Result<BmProblem<S>> {
    let grid = frame.grid()?;
    if bn.len() != grid.len {
        return Err(Error::Config(format!(
            "needs cover {} steps, frame has {}",
            bn.len(),
            grid.len
        )));
    }
    let mut us: Vec<&Unit<S>> = units.to_vec();
    us.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(BmProblem {
        times: grid.steps(),
        dt: grid.dt,
        bn: bn.to_vec(),
        units: us.into_iter().map(|u| bm_unit(u, horizon, frame)).collect::<Result<_>>()?,
        voll: global.voll,
        p_spill: global.p_spill,
        p_redispatch: global.p_redispatch,
    })
}

/// Problem for all units of a control area with its own needs.
pub fn build_area_problem<S: Scalar>(sc: &Scenario<S>, ca: &ControlArea<S>, frame: &MarketConfig) -> Result<BmProblem<S>> {
    let grid = frame.grid()?;
    let bn = bm_needs(sc, ca, &grid);
    let units: Vec<&Unit<S>> = sc.units_in(ca).collect();
    build_problem(&units, sc.horizon(), frame, &bn, &sc.global_params)
}

/// Exact optimum; storage modes are handled by branch and bound.
pub fn solve<S: Scalar>(p: &BmProblem<S>) -> Result<BmResult<S>> {
    let f = |x: S| x.to_f64_lossy();
    let n = p.times.len();
    let h = p.dt as f64 / 60.0;
    let per_h = 60.0 / p.dt as f64;
    let red = f(p.p_redispatch);
    let mut m = Milp::minimize();
    let mut acts = Vec::with_capacity(p.units.len());
    for u in &p.units {
        let mut vars = Vec::with_capacity(n);
        for k in 0..n {
            let price = f(u.price[k]) * h;
            let up = m.add_var(price + red, 0.0, f(u.up_cap(k)));
            let dn = m.add_var(-price + red, 0.0, f(u.dn_cap(k)));
            vars.push((up, dn));
        }
        if let Some(ramp) = &u.ramp {
            for k in 0..n.saturating_sub(1) {
                // final[k+1] - final[k] = plan diff + act diff, within +-ramp.
                let diff = f(u.plan[k + 1] - u.plan[k]);
                let terms = vec![(vars[k + 1].0, 1.0), (vars[k + 1].1, -1.0), (vars[k].0, -1.0), (vars[k].1, 1.0)];
                m.add_row(terms.clone(), Cmp::Le, f(ramp[k]) - diff);
                m.add_row(terms, Cmp::Ge, -f(ramp[k]) - diff);
            }
        }
        if let Some(st) = &u.storage {
            let shared = st.single_mode.then(|| m.add_binary(0.0));
            let mut cum: Vec<(usize, f64)> = Vec::new();
            for k in 0..n {
                let (up, dn) = vars[k];
                let (cu, cd) = (f(u.up_cap(k)), f(u.dn_cap(k)));
                if cu > 0.0 && cd > 0.0 {
                    let s = shared.unwrap_or_else(|| m.add_binary(0.0));
                    m.add_row(vec![(up, 1.0), (s, -cu)], Cmp::Le, 0.0);
                    m.add_row(vec![(dn, 1.0), (s, cd)], Cmp::Le, cd);
                }
                // Selling drains the reservoir, buying fills it.
                cum.push((up, -h / f(st.discharge_eff)));
                cum.push((dn, h * f(st.charge_eff)));
                let e = f(st.e_plan[k]);
                m.add_row(cum.clone(), Cmp::Le, f(st.e_max[k]) - e);
                m.add_row(cum.clone(), Cmp::Ge, f(st.e_min[k]) - e);
            }
        }
        acts.push(vars);
    }
    let mut slack = Vec::with_capacity(n);
    for k in 0..n {
        let voll = m.add_var(f(p.voll), 0.0, f64::INFINITY);
        let spill = m.add_var(SPILL_PENALTY, 0.0, f64::INFINITY);
        let mut terms: Vec<(usize, f64)> = acts.iter().flat_map(|v| [(v[k].0, 1.0), (v[k].1, -1.0)]).collect();
        terms.push((voll, per_h));
        terms.push((spill, -per_h));
        m.add_row(terms, Cmp::Eq, f(p.bn[k]));
        slack.push((voll, spill));
    }
    let sol = m
        .solve()?
        .ok_or_else(|| Error::Solver("balancing mechanism problem infeasible".into()))?;
    let s = |v: usize| S::lit(sol.value(v));
    let p_act: Vec<Vec<S>> = acts
        .iter()
        .map(|vars| vars.iter().map(|&(up, dn)| s(up) - s(dn)).collect())
        .collect();
    let p_final = p_act
        .iter()
        .zip(&p.units)
        .map(|(a, u)| a.iter().zip(&u.plan).map(|(&a, &pl)| pl + a).collect())
        .collect();
    let mut r = BmResult {
        times: p.times.clone(),
        unit_ids: p.units.iter().map(|u| u.id.clone()).collect(),
        p_act,
        p_final,
        e_voll: slack.iter().map(|&(v, _)| s(v).pos()).collect(),
        e_spill: slack.iter().map(|&(_, v)| s(v).pos()).collect(),
        objective: S::lit(sol.objective),
        total_cost: Vec::new(),
    };
    r.total_cost = bm_outputs(&r, p);
    Ok(r)
}

/// Redispatch penalty of a result, summed over units and steps.
pub fn redispatch_term<S: Scalar>(r: &BmResult<S>, p: &BmProblem<S>) -> S {
    r.p_act.iter().flatten().map(|a| a.abs()).fold(S::zero(), |a, b| a + b) * p.p_redispatch
}

/// Balancing cost per step: the objective without the redispatch penalty and
/// with spilled energy valued at the user spill price.
pub fn bm_outputs<S: Scalar>(r: &BmResult<S>, p: &BmProblem<S>) -> Vec<S> {
    let h = S::from_int(p.dt) / S::lit(60.0);
    (0..r.times.len())
        .map(|k| {
            let act = r
                .p_act
                .iter()
                .zip(&p.units)
                .map(|(a, u)| a[k] * u.price[k] * h)
                .fold(S::zero(), |a, b| a + b);
            act + r.e_voll[k] * p.voll + r.e_spill[k] * p.p_spill
        })
        .collect()
}
