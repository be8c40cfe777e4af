//! Coupled clearing of a balancing order book with marginal pricing.
//!
//! Orders are cleared per (area, step): accepted purchases and sales balance
//! and the traded surplus is maximised. Couplings link orders across steps,
//! so the book is split into independent components first.

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use oracle::brute_force_clear;

use crate::error::{Error, Result};
use crate::model::{CouplingKind, Minutes, OrderBook};
use crate::scalar::Scalar;
use crate::solver::{Cmp, Milp};

/// Quantities below this are treated as rejected.
pub const ACCEPT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OrderResult<S> {
    pub id: String,
    pub q_acc: S,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AreaPrice<S> {
    pub area: String,
    pub t: Minutes,
    /// `None` when nothing was traded.
    pub price: Option<S>,
}

/// Outcome of a clearing, aligned with the order book.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClearingResult<S> {
    pub orders: Vec<OrderResult<S>>,
    pub prices: Vec<AreaPrice<S>>,
    /// Traded surplus in euros.
    pub objective: S,
    /// Accepted orders priced on the wrong side of their marginal price.
    pub paradoxical: Vec<String>,
}

impl<S: Scalar> ClearingResult<S> {
    pub fn q_acc(&self) -> Vec<S> {
        self.orders.iter().map(|o| o.q_acc).collect()
    }

    pub fn price(&self, area: &str, t: Minutes) -> Option<S> {
        self.prices
            .iter()
            .find(|p| p.area == area && p.t == t)
            .and_then(|p| p.price)
    }

    /// Writes accepted quantities back into the book.
    pub fn apply(&self, book: &mut OrderBook<S>) {
        for (o, r) in book.orders.iter_mut().zip(&self.orders) {
            o.q_acc = r.q_acc;
            o.accepted = r.accepted;
        }
    }
}

fn is_accepted<S: Scalar>(q: S) -> bool {
    q > S::lit(ACCEPT_TOL)
}

pub(crate) struct Dsu(Vec<usize>);

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    pub(crate) fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Coupling members resolved to order positions.
pub(crate) fn coupling_members<S: Scalar>(book: &OrderBook<S>) -> Result<Vec<Vec<usize>>> {
    let idx = book.index();
    book.couplings
        .iter()
        .map(|c| {
            c.order_ids
                .iter()
                .map(|id| {
                    idx.get(id.as_str())
                        .copied()
                        .ok_or_else(|| Error::Referential(format!("coupling references unknown order {id}")))
                })
                .collect()
        })
        .collect()
}

/// Orders grouped by (area, step).
pub(crate) fn market_keys<S: Scalar>(book: &OrderBook<S>) -> BTreeMap<(String, Minutes), Vec<usize>> {
    let mut keys: BTreeMap<(String, Minutes), Vec<usize>> = BTreeMap::new();
    for (i, o) in book.orders.iter().enumerate() {
        keys.entry((o.area_id.clone(), o.t_start)).or_default().push(i);
    }
    keys
}

/// Traded surplus of a set of accepted quantities.
pub fn surplus<S: Scalar>(book: &OrderBook<S>, q: &[S]) -> S {
    book.orders
        .iter()
        .zip(q)
        .map(|(o, &q)| S::from_int(o.side() as i64) * o.price * q * o.duration_hours())
        .fold(S::zero(), |a, b| a + b)
}

/// Independent sub-books: orders sharing a market key or a coupling.
fn components<S: Scalar>(book: &OrderBook<S>, members: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut dsu = Dsu::new(book.orders.len());
    for group in market_keys(book).values() {
        for w in group.windows(2) {
            dsu.union(w[0], w[1]);
        }
    }
    for m in members {
        for w in m.windows(2) {
            dsu.union(w[0], w[1]);
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..book.orders.len() {
        comps.entry(dsu.find(i)).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = comps.into_values().collect();
    out.sort_by(|a, b| book.orders[a[0]].id.cmp(&book.orders[b[0]].id));
    out
}

/// Clears a book. Accepted quantities maximise the traded surplus subject to
/// per-(area, step) balance, order divisibility and the couplings.
pub fn clear<S: Scalar>(book: &OrderBook<S>) -> Result<ClearingResult<S>> {
    let violations = book.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let members = coupling_members(book)?;
    let n = book.orders.len();
    let mut q = vec![0.0f64; n];
    let mut coupled = vec![false; n];
    for m in &members {
        for &i in m {
            coupled[i] = true;
        }
    }
    for comp in components(book, &members) {
        solve_component(book, &members, &coupled, &comp, &mut q)?;
    }
    let mut q: Vec<S> = q.into_iter().map(S::lit).collect();
    pro_rata(book, &coupled, &mut q);
    Ok(finish(book, q))
}

/// Packages quantities into a result with prices and objective.
pub(crate) fn finish<S: Scalar>(book: &OrderBook<S>, q: Vec<S>) -> ClearingResult<S> {
    let (prices, paradoxical) = marginal_prices(book, &q);
    ClearingResult {
        objective: surplus(book, &q),
        orders: book
            .orders
            .iter()
            .zip(&q)
            .map(|(o, &q)| OrderResult {
                id: o.id.clone(),
                q_acc: q,
                accepted: is_accepted(q),
            })
            .collect(),
        prices,
        paradoxical,
    }
}

fn solve_component<S: Scalar>(
    book: &OrderBook<S>,
    members: &[Vec<usize>],
    coupled: &[bool],
    comp: &[usize],
    q_out: &mut [f64],
) -> Result<()> {
    let f = |x: S| x.to_f64_lossy();
    let in_comp: BTreeSet<usize> = comp.iter().copied().collect();
    let cs: Vec<usize> = (0..members.len())
        .filter(|&c| members[c].iter().any(|i| in_comp.contains(i)))
        .collect();
    let mut m = Milp::maximize();
    // Quantity of each order as a linear expression, and its status binary.
    let mut expr: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    let mut delta: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &cs {
        if book.couplings[c].kind != CouplingKind::IdenticalRatio {
            continue;
        }
        let s = m.add_binary(0.0);
        let r = m.add_var(0.0, 0.0, 1.0);
        m.add_row(vec![(r, 1.0), (s, -1.0)], Cmp::Le, 0.0);
        for &i in &members[c] {
            let o = &book.orders[i];
            expr.insert(i, vec![(s, f(o.q_min)), (r, f(o.q_max - o.q_min))]);
            delta.insert(i, s);
        }
    }
    for &i in comp {
        if expr.contains_key(&i) {
            continue;
        }
        let o = &book.orders[i];
        let q = m.add_var(0.0, 0.0, f(o.q_max));
        expr.insert(i, vec![(q, 1.0)]);
        if coupled[i] || o.q_min > S::zero() {
            let d = m.add_binary(0.0);
            m.add_row(vec![(q, 1.0), (d, -f(o.q_max))], Cmp::Le, 0.0);
            m.add_row(vec![(q, 1.0), (d, -f(o.q_min))], Cmp::Ge, 0.0);
            delta.insert(i, d);
        }
    }
    for &i in comp {
        let o = &book.orders[i];
        let w = o.side() as f64 * f(o.price) * f(o.duration_hours());
        for &(v, c) in &expr[&i] {
            m.add_obj(v, w * c);
        }
    }
    let mut keys: BTreeMap<(&str, Minutes), Vec<usize>> = BTreeMap::new();
    for &i in comp {
        let o = &book.orders[i];
        keys.entry((o.area_id.as_str(), o.t_start)).or_default().push(i);
    }
    for group in keys.values() {
        let terms: Vec<(usize, f64)> = group
            .iter()
            .flat_map(|&i| {
                let side = book.orders[i].side() as f64;
                expr[&i].iter().map(move |&(v, c)| (v, side * c))
            })
            .collect();
        m.add_row(terms, Cmp::Eq, 0.0);
    }
    for &c in &cs {
        let ms = &members[c];
        match book.couplings[c].kind {
            CouplingKind::Exclusion => {
                m.add_row(ms.iter().map(|i| (delta[i], 1.0)).collect(), Cmp::Le, 1.0);
            }
            CouplingKind::ParentChildren => {
                let p = delta[&ms[0]];
                for i in &ms[1..] {
                    if delta[i] != p {
                        m.add_row(vec![(p, 1.0), (delta[i], -1.0)], Cmp::Ge, 0.0);
                    }
                }
            }
            CouplingKind::IdenticalRatio => {}
        }
    }
    let sol = m.solve()?.ok_or(Error::InfeasibleClearing(cs.clone()))?;
    for &i in comp {
        let o = &book.orders[i];
        let mut q: f64 = expr[&i].iter().map(|&(v, c)| c * sol.value(v)).sum();
        let (lo, hi) = (f(o.q_min), f(o.q_max));
        if q.abs() <= 1e-9 {
            q = 0.0;
        } else if (q - hi).abs() <= 1e-9 {
            q = hi;
        } else if (q - lo).abs() <= 1e-9 {
            q = lo;
        }
        q_out[i] = q.clamp(0.0, hi);
    }
    Ok(())
}

/// Spreads the volume of equal-price, uncoupled, fully divisible orders on the
/// same side of a market key pro rata to their size.
fn pro_rata<S: Scalar>(book: &OrderBook<S>, coupled: &[bool], q: &mut [S]) {
    for group in market_keys(book).values() {
        let mut done = vec![false; group.len()];
        for a in 0..group.len() {
            if done[a] {
                continue;
            }
            let oa = &book.orders[group[a]];
            if coupled[group[a]] || oa.q_min > S::zero() {
                continue;
            }
            let tied: Vec<usize> = (a..group.len())
                .filter(|&b| {
                    let ob = &book.orders[group[b]];
                    !coupled[group[b]] && ob.q_min == S::zero() && ob.side() == oa.side() && ob.price == oa.price
                })
                .collect();
            for &b in &tied {
                done[b] = true;
            }
            if tied.len() < 2 {
                continue;
            }
            let total = tied.iter().map(|&b| q[group[b]]).fold(S::zero(), |x, y| x + y);
            let cap = tied.iter().map(|&b| book.orders[group[b]].q_max).fold(S::zero(), |x, y| x + y);
            if cap <= S::zero() {
                continue;
            }
            for &b in &tied {
                let i = group[b];
                q[i] = (total * book.orders[i].q_max / cap).min(book.orders[i].q_max);
            }
        }
    }
}

/// Marginal price of every (area, step) and the accepted orders it leaves out of merit.
///
/// Candidates are the prices of partially accepted divisible orders, falling
/// back to accepted divisible orders and then to any accepted order. The
/// candidate leaving the fewest accepted orders out of merit wins, ties going
/// to the lowest price.
pub fn marginal_prices<S: Scalar>(book: &OrderBook<S>, q: &[S]) -> (Vec<AreaPrice<S>>, Vec<String>) {
    let tol = S::lit(ACCEPT_TOL);
    let mut prices = Vec::new();
    let mut flagged = BTreeSet::new();
    for ((area, t), group) in market_keys(book) {
        let acc: Vec<usize> = group.iter().copied().filter(|&i| is_accepted(q[i])).collect();
        let divisible = |i: &usize| book.orders[*i].is_divisible();
        let partial: Vec<usize> = acc
            .iter()
            .copied()
            .filter(divisible)
            .filter(|&i| q[i] < book.orders[i].q_max - tol)
            .collect();
        let any_div: Vec<usize> = acc.iter().copied().filter(divisible).collect();
        let cands = [partial, any_div, acc.clone()].into_iter().find(|c| !c.is_empty());
        let out_of_merit = |pi: S| -> Vec<usize> {
            acc.iter()
                .copied()
                .filter(|&i| {
                    let o = &book.orders[i];
                    let eps = S::tol() * (S::one() + pi.abs());
                    (o.side() < 0 && o.price > pi + eps) || (o.side() > 0 && o.price < pi - eps)
                })
                .collect()
        };
        let price = cands.and_then(|c| {
            c.iter()
                .map(|&i| book.orders[i].price)
                .map(|p| (out_of_merit(p).len(), p))
                .min_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)))
                .map(|(_, p)| p)
        });
        if let Some(p) = price {
            for i in out_of_merit(p) {
                flagged.insert(book.orders[i].id.clone());
            }
        }
        prices.push(AreaPrice { area, t, price });
    }
    (prices, flagged.into_iter().collect())
}

/// Coupling and divisibility violations of a set of accepted quantities.
pub fn coupling_violations<S: Scalar>(book: &OrderBook<S>, q: &[S]) -> Vec<String> {
    let mut out = Vec::new();
    let tol = S::lit(ACCEPT_TOL);
    for (o, &q) in book.orders.iter().zip(q) {
        if is_accepted(q) && (q < o.q_min - tol || q > o.q_max + tol) {
            out.push(format!("order {} accepted at {q} outside [{}, {}]", o.id, o.q_min, o.q_max));
        }
        if q < S::zero() {
            out.push(format!("order {} has negative acceptance", o.id));
        }
    }
    let Ok(members) = coupling_members(book) else {
        out.push("coupling references unknown order".into());
        return out;
    };
    for (c, ms) in book.couplings.iter().zip(&members) {
        let acc: Vec<bool> = ms.iter().map(|&i| is_accepted(q[i])).collect();
        match c.kind {
            CouplingKind::Exclusion => {
                if acc.iter().filter(|&&a| a).count() > 1 {
                    out.push(format!("exclusion {:?} has several accepted orders", c.order_ids));
                }
            }
            CouplingKind::ParentChildren => {
                if !acc[0] && acc[1..].iter().any(|&a| a) {
                    out.push(format!("child of {} accepted without its parent", c.order_ids[0]));
                }
            }
            CouplingKind::IdenticalRatio => {
                if !acc.iter().any(|&a| a) {
                    continue;
                }
                let mut ratio: Option<S> = None;
                for &i in ms {
                    let o = &book.orders[i];
                    if o.q_min > S::zero() && !is_accepted(q[i]) {
                        out.push(format!("identical-ratio member {} rejected while others accepted", o.id));
                    }
                    if !o.is_divisible() {
                        continue;
                    }
                    let r = (q[i] - o.q_min) / (o.q_max - o.q_min);
                    match ratio {
                        None => ratio = Some(r),
                        Some(r0) if (r - r0).abs() > S::lit(1e-9) => {
                            out.push(format!("identical-ratio coupling {:?} has ratios {r0} and {r}", c.order_ids));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
    }
    out
}

/// Largest absolute (area, step) imbalance of accepted quantities.
pub fn max_imbalance<S: Scalar>(book: &OrderBook<S>, q: &[S]) -> S {
    market_keys(book)
        .values()
        .map(|g| {
            g.iter()
                .map(|&i| S::from_int(book.orders[i].side() as i64) * q[i])
                .fold(S::zero(), |a, b| a + b)
                .abs()
        })
        .fold(S::zero(), S::max)
}
