use std::collections::BTreeMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Var {
    obj: f64,
    lo: f64,
    hi: f64,
    binary: bool,
}

/// Mixed binary linear program solved by depth-first branch and bound over
/// LP relaxations.
#[derive(Debug, Clone, Default)]
pub struct Milp {
    maximize: bool,
    vars: Vec<Var>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

impl MilpSolution {
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }
}

const INT_TOL: f64 = 1e-6;
const NODE_LIMIT: usize = 200_000;

impl Milp {
    pub fn maximize() -> Self {
        Milp {
            maximize: true,
            ..Default::default()
        }
    }

    pub fn minimize() -> Self {
        Milp::default()
    }

    pub fn add_var(&mut self, obj: f64, lo: f64, hi: f64) -> usize {
        self.vars.push(Var {
            obj,
            lo,
            hi,
            binary: false,
        });
        self.vars.len() - 1
    }

    pub fn add_binary(&mut self, obj: f64) -> usize {
        self.vars.push(Var {
            obj,
            lo: 0.0,
            hi: 1.0,
            binary: true,
        });
        self.vars.len() - 1
    }

    /// Adds `c` to the objective coefficient of `v`.
    pub fn add_obj(&mut self, v: usize, c: f64) {
        self.vars[v].obj += c;
    }

    /// Adds a row; repeated variables are merged.
    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, c) in terms {
            *merged.entry(v).or_insert(0.0) += c;
        }
        let terms = merged.into_iter().filter(|&(_, c)| c != 0.0).collect();
        self.rows.push((terms, cmp, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    fn relax(&self, bounds: &[(f64, f64)]) -> Result<Option<MilpSolution>> {
        let dir = if self.maximize {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        };
        let mut p = Problem::new(dir);
        let vs: Vec<_> = self
            .vars
            .iter()
            .zip(bounds)
            .map(|(v, &(lo, hi))| p.add_var(v.obj, (lo, hi)))
            .collect();
        for (terms, cmp, rhs) in &self.rows {
            let t: Vec<_> = terms.iter().map(|&(i, c)| (vs[i], c)).collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(t.as_slice(), op, *rhs);
        }
        match p.solve() {
            Ok(out) => {
                let sol = out
                    .into_solution()
                    .map_err(|e| Error::Solver(format!("interrupted: {e:?}")))?;
                Ok(Some(MilpSolution {
                    objective: sol.objective(),
                    values: vs.iter().map(|&v| sol.var_value(v)).collect(),
                }))
            }
            Err(microlp::Error::Infeasible) => Ok(None),
            Err(e) => Err(Error::Solver(e.to_string())),
        }
    }

    /// Optimal solution, or `None` when infeasible.
    pub fn solve(&self) -> Result<Option<MilpSolution>> {
        let root: Vec<(f64, f64)> = self.vars.iter().map(|v| (v.lo, v.hi)).collect();
        let better = |a: f64, b: f64| if self.maximize { a > b + 1e-9 } else { a < b - 1e-9 };
        let mut best: Option<MilpSolution> = None;
        let mut stack = vec![root];
        let mut nodes = 0;
        while let Some(bounds) = stack.pop() {
            nodes += 1;
            if nodes > NODE_LIMIT {
                return Err(Error::Solver("branch and bound node limit reached".into()));
            }
            let Some(sol) = self.relax(&bounds)? else { continue };
            if let Some(b) = &best {
                if !better(sol.objective, b.objective) {
                    continue;
                }
            }
            let frac = self
                .vars
                .iter()
                .enumerate()
                .filter(|(_, v)| v.binary)
                .map(|(i, _)| (i, (sol.values[i] - sol.values[i].round()).abs()))
                .filter(|&(_, f)| f > INT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match frac {
                None => {
                    // Re-solve with binaries pinned to clean up rounding noise.
                    let mut fixed = bounds.clone();
                    for (i, v) in self.vars.iter().enumerate() {
                        if v.binary {
                            let r = sol.values[i].round();
                            fixed[i] = (r, r);
                        }
                    }
                    let clean = self.relax(&fixed)?.unwrap_or(sol);
                    if best.as_ref().is_none_or(|b| better(clean.objective, b.objective)) {
                        best = Some(clean);
                    }
                }
                Some((i, _)) => {
                    let up_first = sol.values[i] >= 0.5;
                    let mut lo = bounds.clone();
                    lo[i] = (0.0, 0.0);
                    let mut hi = bounds;
                    hi[i] = (1.0, 1.0);
                    // The branch explored first goes on top of the stack.
                    if up_first {
                        stack.push(lo);
                        stack.push(hi);
                    } else {
                        stack.push(hi);
                        stack.push(lo);
                    }
                }
            }
        }
        Ok(best)
    }
}
