//! Reference implementations used to cross-check the library.

use balsim::bm::BmProblem;
use balsim::model::{CouplingKind, OrderBook};

const ON: f64 = 1e-7;

/// Coupling equations and order bounds evaluated directly on accepted quantities.
pub fn coupling_errors(book: &OrderBook<f64>, q: &[f64]) -> Vec<String> {
    let pos = |id: &str| book.orders.iter().position(|o| o.id == id).expect("known order");
    let on = |i: usize| q[i] > ON;
    let mut out = Vec::new();
    for (o, &x) in book.orders.iter().zip(q) {
        if x > ON && (x < o.q_min - 1e-9 || x > o.q_max + 1e-9) {
            out.push(format!("{} at {x} outside [{}, {}]", o.id, o.q_min, o.q_max));
        }
        if x.abs() > 1e-9 && x <= ON {
            out.push(format!("{} has residual acceptance {x}", o.id));
        }
    }
    for c in &book.couplings {
        let ms: Vec<usize> = c.order_ids.iter().map(|id| pos(id)).collect();
        match c.kind {
            CouplingKind::Exclusion => {
                if ms.iter().filter(|&&i| on(i)).count() > 1 {
                    out.push(format!("exclusion {:?}", c.order_ids));
                }
            }
            CouplingKind::ParentChildren => {
                if ms[1..].iter().any(|&i| on(i)) && !on(ms[0]) {
                    out.push(format!("parent-children {:?}", c.order_ids));
                }
            }
            CouplingKind::IdenticalRatio => {
                // A member with a positive minimum cannot sit at ratio 0 while rejected.
                let any_on = ms.iter().any(|&i| on(i));
                if any_on && ms.iter().any(|&i| book.orders[i].q_min > 0.0 && !on(i)) {
                    out.push(format!("identical ratio all-or-none {:?}", c.order_ids));
                    continue;
                }
                let ratios: Vec<f64> = ms
                    .iter()
                    .map(|&i| &book.orders[i])
                    .zip(ms.iter().map(|&i| q[i]))
                    .filter(|(o, _)| o.q_max > o.q_min)
                    .map(|(o, x)| if x > ON { (x - o.q_min) / (o.q_max - o.q_min) } else { 0.0 })
                    .collect();
                if ratios.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-9) {
                    out.push(format!("identical ratio {:?}: {ratios:?}", c.order_ids));
                }
            }
        }
    }
    out
}

/// Static data of a thermal unit for the feasibility simulator.
#[derive(Debug, Clone, Copy)]
pub struct Thermal {
    pub p_min: f64,
    pub p_max: f64,
    /// MW per step; `None` when unlimited.
    pub ramp: Option<f64>,
    pub d_su: i64,
    pub d_min_on: i64,
    pub d_min_off: i64,
    pub d_notice: i64,
}

/// Operating-constraint violations of `traj` compared with the original `plan`.
///
/// Steps are `dt` minutes long and step `k` starts at `k * dt`. Only
/// departures from the plan are judged: bounds and ramps at changed steps,
/// ON and OFF runs whose extent changed, and startups the plan did not have.
/// Runs touching either end of the arrays are open and never too short.
pub fn thermal_violations(u: &Thermal, dt: i64, t_ex: i64, plan: &[f64], traj: &[f64]) -> Vec<String> {
    let n = plan.len();
    let tol = 1e-9;
    let changed = |k: usize| (traj[k] - plan[k]).abs() > tol;
    // Start-up steps below p_min count as ON.
    let on = |p: &[f64], k: usize| p[k] > tol;
    let off = |p: &[f64], k: usize| !on(p, k);
    let stable = |p: &[f64], k: usize| p[k] >= u.p_min - tol;
    let mut out = Vec::new();
    if let Some(first) = (0..n).find(|&k| changed(k)) {
        if (first as i64) * dt - t_ex < u.d_notice {
            out.push(format!("change at step {first} inside the notice delay"));
        }
    }
    for k in 0..n {
        if !changed(k) {
            continue;
        }
        let p = traj[k];
        if !(off(traj, k) || (p >= u.p_min - tol && p <= u.p_max + tol)) {
            out.push(format!("step {k}: output {p} outside {{0}} U [{}, {}]", u.p_min, u.p_max));
        }
    }
    if let Some(r) = u.ramp {
        for k in 1..n {
            let d = (traj[k] - traj[k - 1]).abs();
            let worse = d > r + tol && d > (plan[k] - plan[k - 1]).abs() + tol;
            if (changed(k) || changed(k - 1)) && stable(traj, k) && stable(traj, k - 1) && worse {
                out.push(format!("ramp {} -> {} at step {k}", traj[k - 1], traj[k]));
            }
        }
    }
    let runs = |p: &[f64], want_on: bool| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        let mut k = 0;
        while k < n {
            let is = |j: usize| if want_on { on(p, j) } else { off(p, j) };
            if is(k) {
                let s = k;
                while k < n && is(k) {
                    k += 1;
                }
                v.push((s, k - 1));
            } else {
                k += 1;
            }
        }
        v
    };
    for (want_on, min, what) in [(true, u.d_min_on, "ON"), (false, u.d_min_off, "OFF")] {
        let before = runs(plan, want_on);
        for (s, e) in runs(traj, want_on) {
            if s == 0 || e == n - 1 || before.contains(&(s, e)) {
                continue;
            }
            if ((e - s + 1) as i64) * dt < min {
                out.push(format!("{what} run {s}..={e} shorter than {min} min"));
            }
        }
    }
    // Startups: an OFF step followed by an ON step.
    let starts = |p: &[f64]| -> Vec<usize> { (1..n).filter(|&k| off(p, k - 1) && on(p, k)).collect() };
    let planned = starts(plan);
    for k in starts(traj) {
        if planned.contains(&k) {
            continue;
        }
        let mut s = k;
        while s > 0 && off(traj, s - 1) {
            s -= 1;
        }
        let t_start = (k as i64) * dt;
        let stopped_at = if s == 0 { i64::MIN / 2 } else { (s as i64) * dt };
        // Delaying a planned startup keeps its preparation; anything else starts from scratch.
        let delayed = planned.iter().any(|&j| j >= s && j < k);
        let from = if delayed { stopped_at } else { stopped_at.max(t_ex) };
        if t_start - from < u.d_su {
            out.push(format!("startup at step {k} has {} min to start, needs {}", t_start - from, u.d_su));
        }
    }
    out
}

/// Optimum of a small activation problem by exhaustive search on a 0.1 MW grid.
///
/// Units without ramping limits decouple the steps, which are then searched
/// one at a time; otherwise the search is joint over all steps.
pub fn bm_grid_search(p: &BmProblem<f64>) -> f64 {
    let n = p.times.len();
    let h = p.dt as f64 / 60.0;
    let cells = |lo: f64, hi: f64| -> Vec<f64> {
        let a = (lo * 10.0).round() as i64;
        let b = (hi * 10.0).round() as i64;
        (a..=b).map(|i| i as f64 / 10.0).collect()
    };
    // Candidate activations per (unit, step).
    let grid: Vec<Vec<Vec<f64>>> = p
        .units
        .iter()
        .map(|u| {
            (0..n)
                .map(|k| {
                    if u.frozen[k] {
                        vec![0.0]
                    } else {
                        cells((u.lo[k] - u.plan[k]).min(0.0), (u.hi[k] - u.plan[k]).max(0.0))
                    }
                })
                .collect()
        })
        .collect();
    let step_cost = |k: usize, acts: &[f64]| -> f64 {
        let mut c = 0.0;
        let mut sum = 0.0;
        for (u, &a) in p.units.iter().zip(acts) {
            c += a * u.price[k] * h + a.abs() * p.p_redispatch;
            sum += a;
        }
        let residual = (p.bn[k] - sum) * h;
        c + residual.max(0.0) * p.voll + (-residual).max(0.0) * 26000.0
    };
    let ramp_ok = |acts: &[Vec<f64>]| -> bool {
        p.units.iter().enumerate().all(|(i, u)| match &u.ramp {
            None => true,
            Some(r) => (1..n).all(|k| {
                let d = (u.plan[k] + acts[k][i]) - (u.plan[k - 1] + acts[k - 1][i]);
                d.abs() <= r[k - 1] + 1e-9
            }),
        })
    };
    // Enumerates every combination of one value per slot.
    fn each(slots: &[&Vec<f64>], cur: &mut Vec<f64>, f: &mut dyn FnMut(&[f64])) {
        if cur.len() == slots.len() {
            f(cur);
            return;
        }
        for &v in slots[cur.len()] {
            cur.push(v);
            each(slots, cur, f);
            cur.pop();
        }
    }
    let m = p.units.len();
    if p.units.iter().all(|u| u.ramp.is_none()) {
        return (0..n)
            .map(|k| {
                let slots: Vec<&Vec<f64>> = grid.iter().map(|g| &g[k]).collect();
                let mut best = f64::INFINITY;
                each(&slots, &mut Vec::new(), &mut |a| best = best.min(step_cost(k, a)));
                best
            })
            .sum();
    }
    let slots: Vec<&Vec<f64>> = (0..n).flat_map(|k| grid.iter().map(move |g| &g[k])).collect();
    let mut best = f64::INFINITY;
    each(&slots, &mut Vec::new(), &mut |flat| {
        let acts: Vec<Vec<f64>> = flat.chunks(m).map(|c| c.to_vec()).collect();
        if ramp_ok(&acts) {
            let c: f64 = (0..n).map(|k| step_cost(k, &acts[k])).sum();
            best = best.min(c);
        }
    });
    best
}

/// Linear interpolation of `ys` over increasing `xs`, clamped at the ends.
pub fn lerp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    for i in 1..xs.len() {
        if x <= xs[i] {
            let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            return ys[i - 1] + w * (ys[i] - ys[i - 1]);
        }
    }
    ys[ys.len() - 1]
}

/// Risk-averse slice price written out term by term.
///
/// `i` indexes the full quantile lists (sentinels included); `stack` is the
/// cumulated volume of the slice's direction up to this slice; `cost_up` and
/// `cost_dn` take a non-negative volume.
pub fn risk_price(
    alphas: &[f64],
    eps: &[f64],
    i: usize,
    stack: f64,
    upward: bool,
    cost_up: &dyn Fn(f64) -> f64,
    cost_dn: &dyn Fn(f64) -> f64,
) -> f64 {
    let a_min = alphas[0];
    let a_max = alphas[alphas.len() - 1];
    let a = alphas[i];
    let k_d = a - 0.5 * (a - a_min);
    let k_u = a + 0.5 * (a_max - a);
    let e_kd = lerp(alphas, eps, k_d);
    let e_ku = lerp(alphas, eps, k_u);
    let main = if upward { cost_up(stack) } else { cost_dn(stack) };
    (main + a * cost_dn((e_kd - eps[i]).abs()) + (1.0 - a) * cost_up((e_ku - eps[i]).abs())) / stack
}

/// Whether a plan respects the unit's own run lengths, ramps and startup
/// durations. Steps strictly between 0 and `p_min` are start-up steps and
/// count as ON.
pub fn plan_feasible(u: &Thermal, dt: i64, plan: &[f64]) -> bool {
    let n = plan.len();
    let on = |k: usize| plan[k] > 1e-9;
    let stable = |k: usize| plan[k] >= u.p_min - 1e-9;
    let mut k = 0;
    while k < n {
        let s = k;
        let kind = on(k);
        while k < n && on(k) == kind {
            k += 1;
        }
        if s == 0 || k == n {
            continue;
        }
        let len = (k - s) as i64 * dt;
        let min = if kind { u.d_min_on } else { u.d_min_off.max(u.d_su) };
        if len < min {
            return false;
        }
    }
    let r = u.ramp.unwrap_or(f64::INFINITY);
    (1..n).all(|k| !(stable(k) && stable(k - 1)) || (plan[k] - plan[k - 1]).abs() <= r + 1e-9)
}
