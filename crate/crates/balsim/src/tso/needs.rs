use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ControlArea, CouplingKind, Direction, Minutes, OrderBook, Scenario, TimeGrid};
use crate::scalar::Scalar;

/// Signed balancing needs of one control area; positive means upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BalancingNeeds<S> {
    pub area_id: String,
    pub times: Vec<Minutes>,
    pub dt: Minutes,
    /// Needs before the volume cap.
    pub raw: Vec<S>,
    pub bn: Vec<S>,
}

impl<S: Scalar> BalancingNeeds<S> {
    pub fn direction(&self, k: usize) -> Option<Direction> {
        let v = self.bn[k];
        if v > S::zero() {
            Some(Direction::Up)
        } else if v < S::zero() {
            Some(Direction::Down)
        } else {
            None
        }
    }
}

/// Uncapped imbalance per grid step: consumption minus generation plus
/// the commercial balances of the area's market zones.
///
/// With `delta_for` loads and renewables use their forecasts instead of their plans.
pub fn raw_needs<S: Scalar>(sc: &Scenario<S>, ca: &ControlArea<S>, grid: &TimeGrid, delta_for: bool) -> Vec<S> {
    let h = sc.horizon();
    grid.steps()
        .into_iter()
        .map(|t| {
            let t1 = t + grid.dt;
            let mut load = S::zero();
            let mut gen = S::zero();
            for u in sc.units_in(ca) {
                let forecasted = delta_for && (u.unit_type.is_load() || u.unit_type.is_renewable());
                let p = if forecasted { u.forecast() } else { &u.p_plan }.mean(h, t, t1);
                if u.unit_type.is_load() {
                    load = load + p.abs();
                } else {
                    gen = gen + p;
                }
            }
            let bal = ca
                .market_area_ids
                .iter()
                .filter_map(|z| ca.commercial_balance.get(z))
                .map(|s| s.mean(h, t, t1))
                .fold(S::zero(), |a, b| a + b);
            load - gen + bal
        })
        .collect()
}

/// Volume BSP orders of an area can offer in one direction at `t`.
///
/// Orders linked by exclusions count once per linked group, with the
/// largest member.
pub fn bsp_overall_volume<S: Scalar>(book: &OrderBook<S>, area_id: &str, t: Minutes, dir: Direction) -> S {
    let want_sigma = match dir {
        Direction::Up => -1,
        Direction::Down => 1,
    };
    let pool: Vec<usize> = book
        .orders
        .iter()
        .enumerate()
        .filter(|(_, o)| !o.is_tso && o.area_id == area_id && o.t_start == t && o.sigma == want_sigma)
        .map(|(i, _)| i)
        .collect();
    let idx = book.index();
    let mut parent: BTreeMap<usize, usize> = pool.iter().map(|&i| (i, i)).collect();
    fn find(p: &mut BTreeMap<usize, usize>, i: usize) -> usize {
        let mut r = i;
        while p[&r] != r {
            r = p[&r];
        }
        p.insert(i, r);
        r
    }
    for c in book.couplings.iter().filter(|c| c.kind == CouplingKind::Exclusion) {
        let members: Vec<usize> = c
            .order_ids
            .iter()
            .filter_map(|id| idx.get(id.as_str()).copied())
            .filter(|i| parent.contains_key(i))
            .collect();
        for w in members.windows(2) {
            let a = find(&mut parent, w[0]);
            let b = find(&mut parent, w[1]);
            if a != b {
                parent.insert(a.max(b), a.min(b));
            }
        }
    }
    let mut best: BTreeMap<usize, S> = BTreeMap::new();
    for &i in &pool {
        let r = find(&mut parent, i);
        let q = book.orders[i].q_max;
        let e = best.entry(r).or_insert(q);
        *e = e.max(q);
    }
    best.values().fold(S::zero(), |a, &b| a + b)
}

/// Balancing needs of a control area at each market step, capped in magnitude
/// by the BSP volume able to compensate them.
pub fn compute_needs<S: Scalar>(
    sc: &Scenario<S>,
    ca: &ControlArea<S>,
    grid: &TimeGrid,
    book: &OrderBook<S>,
) -> BalancingNeeds<S> {
    let raw = raw_needs(sc, ca, grid, ca.tso_params.delta_for);
    let times = grid.steps();
    let bn = raw
        .iter()
        .zip(&times)
        .map(|(&b, &t)| {
            if b == S::zero() {
                return b;
            }
            let dir = if b > S::zero() { Direction::Up } else { Direction::Down };
            let cap = bsp_overall_volume(book, &ca.id, t, dir);
            b.signum() * b.abs().min(cap)
        })
        .collect();
    BalancingNeeds {
        area_id: ca.id.clone(),
        times,
        dt: grid.dt,
        raw,
        bn,
    }
}
