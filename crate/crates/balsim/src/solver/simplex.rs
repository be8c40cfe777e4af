//! Small dense two-phase simplex with Bland's rule.
//!
//! Used by the brute-force clearing oracle so that it does not share a
//! solver with the production clearing.

use super::milp::Cmp;

const EPS: f64 = 1e-9;

/// `max c.x` subject to rows and `lo <= x <= hi` (finite bounds).
/// Returns `None` when infeasible.
pub fn dense_lp(c: &[f64], rows: &[(Vec<f64>, Cmp, f64)], lo: &[f64], hi: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    // Shift x = lo + y with 0 <= y <= hi - lo; upper bounds become rows.
    let mut cons: Vec<(Vec<f64>, Cmp, f64)> = Vec::new();
    for (a, cmp, b) in rows {
        let shift: f64 = a.iter().zip(lo).map(|(x, l)| x * l).sum();
        cons.push((a.clone(), *cmp, b - shift));
    }
    for j in 0..n {
        if hi[j] < lo[j] - EPS {
            return None;
        }
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        cons.push((a, Cmp::Le, (hi[j] - lo[j]).max(0.0)));
    }
    for con in cons.iter_mut() {
        if con.2 < 0.0 {
            con.0.iter_mut().for_each(|x| *x = -*x);
            con.2 = -con.2;
            con.1 = match con.1 {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
    }
    let m = cons.len();
    let n_slack = cons.iter().filter(|c| c.1 != Cmp::Eq).count();
    let n_art = cons.iter().filter(|c| c.1 != Cmp::Le).count();
    let width = n + n_slack + n_art + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let (mut s, mut a) = (n, n + n_slack);
    let mut arts = Vec::new();
    for (i, (row, cmp, b)) in cons.iter().enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][width - 1] = *b;
        match cmp {
            Cmp::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Cmp::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                basis[i] = a;
                arts.push(a);
                a += 1;
            }
            Cmp::Eq => {
                t[i][a] = 1.0;
                basis[i] = a;
                arts.push(a);
                a += 1;
            }
        }
    }
    // Phase one: minimise the artificials (maximise their negated sum).
    let mut obj1 = vec![0.0; width - 1];
    for &j in &arts {
        obj1[j] = -1.0;
    }
    run(&mut t, &mut basis, &obj1, width - 1);
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n + n_slack)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    if infeas > 1e-7 {
        return None;
    }
    // Drive remaining zero-valued artificials out of the basis when possible.
    for i in 0..m {
        if basis[i] >= n + n_slack {
            if let Some(j) = (0..n + n_slack).find(|&j| t[i][j].abs() > EPS) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut obj2 = vec![0.0; width - 1];
    obj2[..n].copy_from_slice(c);
    run(&mut t, &mut basis, &obj2, n + n_slack);
    let mut y = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            y[b] = t[i][width - 1];
        }
    }
    let x: Vec<f64> = y.iter().zip(lo).map(|(v, l)| v + l).collect();
    let val = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Some((val, x))
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    t[r].iter_mut().for_each(|x| *x /= p);
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[c];
            if f.abs() > 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= f * p);
            }
        }
    }
    basis[r] = c;
}

/// Maximises `obj` over columns `< allowed` with Bland's rule.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], obj: &[f64], allowed: usize) {
    let last = t.first().map_or(0, |r| r.len() - 1);
    loop {
        // Reduced cost of column j: obj_j - sum_i obj_{basis_i} * t_ij.
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let rc = obj[j] - basis.iter().enumerate().map(|(i, &b)| obj[b] * t[i][j]).sum::<f64>();
            rc > EPS
        });
        let Some(j) = entering else { return };
        let leave = (0..t.len())
            .filter(|&i| t[i][j] > EPS)
            .min_by(|&a, &b| {
                let ra = t[a][last] / t[a][j];
                let rb = t[b][last] / t[b][j];
                ra.partial_cmp(&rb).unwrap().then(basis[a].cmp(&basis[b]))
            });
        let Some(i) = leave else { return };
        pivot(t, basis, i, j);
    }
}
