use crate::scalar::Scalar;

/// Division of the needs of a frame into slices shared across steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDivision<S> {
    /// Relative sizes of the upward slices.
    pub up: Vec<S>,
    /// Relative sizes of the downward slices, as negative values.
    pub down: Vec<S>,
    /// Per step, the slice quantities it reaches in stacking order.
    pub per_step: Vec<Vec<S>>,
}

fn divide<S: Scalar>(need: &[S], v_slice: S, per_step: &mut [Vec<S>]) -> Vec<S> {
    let mut residual: Vec<S> = need.to_vec();
    let mut active: Vec<usize> = (0..need.len()).filter(|&t| need[t] > S::zero()).collect();
    let mut sizes = Vec::new();
    while !active.is_empty() {
        let v = active
            .iter()
            .map(|&t| residual[t])
            .fold(v_slice, S::min);
        for &t in &active {
            per_step[t].push(v);
            residual[t] = residual[t] - v;
        }
        active.retain(|&t| residual[t] > S::zero());
        sizes.push(v);
    }
    sizes
}

/// Splits positive and negative needs independently into slices of at most
/// `v_slice`, each slice as large as every still-unserved step allows.
pub fn slice_division<S: Scalar>(bn: &[S], v_slice: S) -> SliceDivision<S> {
    let mut per_step = vec![Vec::new(); bn.len()];
    let pos: Vec<S> = bn.iter().map(|&b| b.max(S::zero())).collect();
    let neg: Vec<S> = bn.iter().map(|&b| (-b).max(S::zero())).collect();
    let up = divide(&pos, v_slice, &mut per_step);
    let down = divide(&neg, v_slice, &mut per_step)
        .into_iter()
        .map(|v| -v)
        .collect();
    SliceDivision { up, down, per_step }
}

/// Average cost of each cumulative stack: `C(sum_j<=i q_j) / sum_j<=i q_j`.
pub fn basic_elastic_prices<S: Scalar>(quantities: &[S], mut cost: impl FnMut(S) -> Option<S>) -> Vec<Option<S>> {
    let mut cum = S::zero();
    quantities
        .iter()
        .map(|&q| {
            cum = cum + q;
            cost(cum).map(|c| c / cum)
        })
        .collect()
}
