//! Volume-based risk-averse TSO bidding from forecast-error quantiles.

use crate::error::{Error, Result};
use crate::model::Direction;
use crate::scalar::Scalar;

/// One slice of the risk-averse curve; `index` points into the inner quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSlice<S> {
    pub index: usize,
    pub q: S,
    /// -1 for an upward need, +1 for a downward one.
    pub sigma: i8,
}

/// Slice quantities and directions for need `bn` and inner quantile errors `eps`
/// (sentinels excluded), in quantile order. Zero-volume slices are dropped.
///
/// When `bn + eps` changes sign, the crossing lies between consecutive
/// quantiles `i_s1` (last negative) and `i_s2 = i_s1 + 1`.
pub fn risk_averse_slices<S: Scalar>(bn: S, eps: &[S]) -> Result<Vec<RiskSlice<S>>> {
    let n = eps.len();
    if n < 2 {
        return Err(Error::Config("risk-averse bidding needs at least two quantiles".into()));
    }
    if bn == S::zero() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(n);
    let up = |i, q| RiskSlice { index: i, q, sigma: -1 };
    let dn = |i, q| RiskSlice { index: i, q, sigma: 1 };
    let below = eps.iter().filter(|&&e| bn + e < S::zero()).count();
    let all_up = (bn > S::zero() && bn + eps[0] >= S::zero()) || below == 0;
    let all_dn = !all_up && ((bn < S::zero() && bn + eps[n - 1] <= S::zero()) || below == n);
    if all_up {
        out.push(up(0, bn + eps[0]));
        for i in 1..n {
            out.push(up(i, eps[i] - eps[i - 1]));
        }
    } else if all_dn {
        for i in 0..n - 1 {
            out.push(dn(i, (eps[i] - eps[i + 1]).abs()));
        }
        out.push(dn(n - 1, (bn + eps[n - 1]).abs()));
    } else {
        let s1 = below - 1;
        let s2 = s1 + 1;
        for i in 0..s1 {
            out.push(dn(i, (eps[i] - eps[i + 1]).abs()));
        }
        out.push(dn(s1, (bn + eps[s1]).abs()));
        out.push(up(s2, bn + eps[s2]));
        for i in s2 + 1..n {
            out.push(up(i, eps[i] - eps[i - 1]));
        }
    }
    out.retain(|s| s.q > S::zero());
    Ok(out)
}

/// Error at probability `a`, linear between listed quantiles and clamped at the ends.
pub fn interp_epsilon<S: Scalar>(alphas: &[S], eps: &[S], a: S) -> S {
    let n = alphas.len();
    if a <= alphas[0] {
        return eps[0];
    }
    if a >= alphas[n - 1] {
        return eps[n - 1];
    }
    let hi = alphas.iter().position(|&x| x >= a).unwrap_or(n - 1);
    if alphas[hi] == a {
        return eps[hi];
    }
    let lo = hi - 1;
    let w = (a - alphas[lo]) / (alphas[hi] - alphas[lo]);
    eps[lo] + (eps[hi] - eps[lo]) * w
}

/// Prices of risk-averse slices.
///
/// `alphas` and `eps` are the full quantile lists including the `alpha_min`
/// and `alpha_max` sentinels; slice indexes refer to the inner entries.
/// Upward slices stack from the lowest upward slice, downward slices from
/// the highest downward slice. `cost(dir, volume)` is the alternative's cost;
/// `None` marks an unavailable alternative.
pub fn risk_averse_prices<S: Scalar>(
    slices: &[RiskSlice<S>],
    alphas: &[S],
    eps: &[S],
    mut cost: impl FnMut(Direction, S) -> Option<S>,
) -> Vec<Option<S>> {
    let n = alphas.len();
    let (a_min, a_max) = (alphas[0], alphas[n - 1]);
    let half = S::lit(0.5);
    slices
        .iter()
        .map(|s| {
            let stack = slices
                .iter()
                .filter(|o| o.sigma == s.sigma)
                .filter(|o| if s.sigma < 0 { o.index <= s.index } else { o.index >= s.index })
                .fold(S::zero(), |a, o| a + o.q);
            if stack <= S::zero() {
                return None;
            }
            let i = s.index + 1;
            let a = alphas[i];
            let e = eps[i];
            let e_d = interp_epsilon(alphas, eps, a - half * (a - a_min));
            let e_u = interp_epsilon(alphas, eps, a + half * (a_max - a));
            let main_dir = if s.sigma < 0 { Direction::Up } else { Direction::Down };
            let main = cost(main_dir, stack)?;
            let lower = cost(Direction::Down, (e_d - e).abs())?;
            let upper = cost(Direction::Up, (e_u - e).abs())?;
            Some((main + a * lower + (S::one() - a) * upper) / stack)
        })
        .collect()
}
