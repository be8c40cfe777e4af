//! Write-back of cleared activations into unit plans, portfolio plans and
//! reservoir levels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clearing::ClearingResult;
use crate::error::{Error, Result};
use crate::model::{MarketConfig, Minutes, OrderBook, Scenario};
use crate::scalar::Scalar;

/// Changes applied by one clearing, on the scenario horizon.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DatasetDelta<S> {
    /// Updated plans of units with accepted orders.
    pub plans: BTreeMap<String, Vec<S>>,
    /// Plans of every portfolio after the update.
    pub portfolios: BTreeMap<String, Vec<S>>,
    /// Updated stored energy of reservoir units with accepted orders.
    pub e_stored: BTreeMap<String, Vec<S>>,
}

/// One accepted BSP order, valued at the marginal price of its step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ActivationRow<S> {
    pub order_id: String,
    pub unit_id: String,
    pub t: Minutes,
    /// Signed power change of the unit (positive = upward).
    pub mw: S,
    pub price: Option<S>,
    /// Energy times price, paid to the unit when positive.
    pub eur: Option<S>,
}

/// Plan of every portfolio: the sum of its member plans.
pub fn portfolio_plans<S: Scalar>(sc: &Scenario<S>) -> BTreeMap<String, Vec<S>> {
    let h = sc.horizon();
    let mut out: BTreeMap<String, Vec<S>> = BTreeMap::new();
    for u in &sc.units {
        let p = u.p_plan.values(h);
        let acc = out.entry(u.portfolio().to_string()).or_insert_with(|| vec![S::zero(); h.len]);
        for (a, v) in acc.iter_mut().zip(p) {
            *a = *a + v;
        }
    }
    out
}

/// New scenario snapshot with the accepted quantities of `book` folded in.
///
/// Each accepted order moves its unit's plan by `-sigma * q_acc` over the
/// order's span; reservoir levels move by the cumulated energy `sigma * q_acc`
/// from the order's start onwards. TSO orders carry no unit and are skipped.
pub fn apply_clearing<S: Scalar>(
    sc: &Scenario<S>,
    book: &OrderBook<S>,
    result: &ClearingResult<S>,
    market: &MarketConfig,
) -> Result<(Scenario<S>, DatasetDelta<S>, Vec<ActivationRow<S>>)> {
    let grid = market.grid()?;
    let h = *sc.horizon();
    if !h.aligned(&grid) {
        return Err(Error::Config(format!(
            "market grid (dt {}) does not align with the scenario horizon (dt {})",
            grid.dt, h.dt
        )));
    }
    if result.orders.len() != book.orders.len() {
        return Err(Error::Config("clearing result does not match the order book".into()));
    }
    let mut next = sc.clone();
    let pos: BTreeMap<String, usize> = next.units.iter().enumerate().map(|(i, u)| (u.id.clone(), i)).collect();
    let mut touched = BTreeSet::new();
    let mut rows = Vec::new();
    for (o, r) in book.orders.iter().zip(&result.orders) {
        if o.is_tso || r.q_acc == S::zero() {
            continue;
        }
        let uid = o
            .unit_id
            .as_deref()
            .ok_or_else(|| Error::Referential(format!("BSP order {} has no unit", o.id)))?;
        let &i = pos
            .get(uid)
            .ok_or_else(|| Error::Referential(format!("order {} references unknown unit {uid}", o.id)))?;
        let sigma = S::from_int(o.sigma as i64);
        let unit = &mut next.units[i];
        unit.p_plan.add_over(&h, o.t_start, o.t_end, -sigma * r.q_acc);
        if unit.unit_type.is_reservoir() {
            if let Some(e) = unit.e_stored.as_mut() {
                e.add_over(&h, o.t_start, h.end(), sigma * r.q_acc * o.duration_hours());
            }
        }
        touched.insert(i);
        let price = result.price(&o.area_id, o.t_start);
        rows.push(ActivationRow {
            order_id: o.id.clone(),
            unit_id: uid.to_string(),
            t: o.t_start,
            mw: -sigma * r.q_acc,
            price,
            eur: price.map(|p| -sigma * r.q_acc * o.duration_hours() * p),
        });
    }
    let mut delta = DatasetDelta::default();
    for &i in &touched {
        let u = &next.units[i];
        delta.plans.insert(u.id.clone(), u.p_plan.values(&h));
        if let Some(e) = u.e_stored.as_ref().filter(|_| u.unit_type.is_reservoir()) {
            delta.e_stored.insert(u.id.clone(), e.values(&h));
        }
    }
    delta.portfolios = portfolio_plans(&next);
    Ok((next, delta, rows))
}

/// Plan change per horizon step between two snapshots, summed over units.
pub fn plan_change<S: Scalar>(before: &Scenario<S>, after: &Scenario<S>) -> Vec<S> {
    let h = before.horizon();
    let mut out = vec![S::zero(); h.len];
    for (a, b) in before.units.iter().zip(&after.units) {
        for (k, (x, y)) in a.p_plan.values(h).into_iter().zip(b.p_plan.values(h)).enumerate() {
            out[k] = out[k] + (y - x);
        }
    }
    out
}
