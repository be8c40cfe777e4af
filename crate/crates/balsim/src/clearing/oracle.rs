//! Exhaustive reference clearing for small books.

use super::{coupling_members, finish, market_keys, ClearingResult};
use crate::error::{Error, Result};
use crate::model::{CouplingKind, OrderBook};
use crate::scalar::Scalar;
use crate::solver::{dense_lp, Cmp};

pub const ORACLE_MAX_ORDERS: usize = 12;

/// Clears a book of at most 12 orders by enumerating every acceptance pattern.
///
/// Each pattern fixes which orders are active; the quantities of a pattern
/// then follow from a small linear program solved with a dense simplex that
/// shares no code with the production solver.
pub fn brute_force_clear<S: Scalar>(book: &OrderBook<S>) -> Result<ClearingResult<S>> {
    let n = book.orders.len();
    if n > ORACLE_MAX_ORDERS {
        return Err(Error::OracleTooLarge(n));
    }
    let violations = book.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let members = coupling_members(book)?;
    let f = |x: S| x.to_f64_lossy();
    let c: Vec<f64> = book
        .orders
        .iter()
        .map(|o| o.side() as f64 * f(o.price) * f(o.duration_hours()))
        .collect();
    let mut rows: Vec<(Vec<f64>, Cmp, f64)> = Vec::new();
    for group in market_keys(book).values() {
        let mut a = vec![0.0; n];
        for &i in group {
            a[i] = book.orders[i].side() as f64;
        }
        rows.push((a, Cmp::Eq, 0.0));
    }
    let mut ratio_rows: Vec<(Vec<f64>, Cmp, f64)> = Vec::new();
    for (cp, ms) in book.couplings.iter().zip(&members) {
        if cp.kind != CouplingKind::IdenticalRatio {
            continue;
        }
        // (q_a - min_a) / range_a = (q_b - min_b) / range_b for divisible members.
        let div: Vec<usize> = ms.iter().copied().filter(|&i| book.orders[i].is_divisible()).collect();
        for w in div.windows(2) {
            let (oa, ob) = (&book.orders[w[0]], &book.orders[w[1]]);
            let (ra, rb) = (f(oa.q_max - oa.q_min), f(ob.q_max - ob.q_min));
            let mut a = vec![0.0; n];
            a[w[0]] = 1.0 / ra;
            a[w[1]] = -1.0 / rb;
            ratio_rows.push((a, Cmp::Eq, f(oa.q_min) / ra - f(ob.q_min) / rb));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << n) {
        let on = |i: usize| mask & (1 << i) != 0;
        if !pattern_ok(book, &members, &on) {
            continue;
        }
        let lo: Vec<f64> = (0..n).map(|i| if on(i) { f(book.orders[i].q_min) } else { 0.0 }).collect();
        let hi: Vec<f64> = (0..n).map(|i| if on(i) { f(book.orders[i].q_max) } else { 0.0 }).collect();
        // Ratio rows only bind when the coupling is active.
        let mut active = rows.clone();
        active.extend(
            ratio_rows
                .iter()
                .filter(|(a, _, _)| a.iter().enumerate().all(|(i, &x)| x == 0.0 || on(i)))
                .cloned(),
        );
        let Some((val, x)) = dense_lp(&c, &active, &lo, &hi) else { continue };
        if best.as_ref().is_none_or(|(b, _)| val > *b + 1e-9) {
            best = Some((val, x));
        }
    }
    let x = best.map(|(_, x)| x).unwrap_or_else(|| vec![0.0; n]);
    let q: Vec<S> = x
        .into_iter()
        .map(|v| S::lit(if v.abs() < 1e-9 { 0.0 } else { v }))
        .collect();
    Ok(finish(book, q))
}

/// Whether an activity pattern satisfies the coupling status constraints.
fn pattern_ok<S: Scalar>(book: &OrderBook<S>, members: &[Vec<usize>], on: &dyn Fn(usize) -> bool) -> bool {
    book.couplings.iter().zip(members).all(|(c, ms)| match c.kind {
        CouplingKind::Exclusion => ms.iter().filter(|&&i| on(i)).count() <= 1,
        CouplingKind::ParentChildren => on(ms[0]) || ms[1..].iter().all(|&i| !on(i)),
        CouplingKind::IdenticalRatio => ms.iter().all(|&i| on(i)) || ms.iter().all(|&i| !on(i)),
    })
}
