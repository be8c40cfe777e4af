//! Coupling links between the orders of one unit.

use std::collections::{BTreeMap, BTreeSet};

use super::build::UnitOrders;
use crate::model::{Coupling, CouplingKind, CouplingRule};
use crate::scalar::Scalar;

/// Couplings for the orders of a single unit.
///
/// * parent-children over each startup `(bottom, top)` pair;
/// * identical ratio over the members of a multi-step index;
/// * exclusion per step and direction across different indexes;
/// * exclusion per step over the bottoms of overlapping startup indexes;
/// * exclusion between the edges of an index and opposite orders next to it;
/// * exclusion of completely exclusive orders against same-direction orders.
pub fn create_couplings<S: Scalar>(uo: &UnitOrders<S>) -> Vec<Coupling> {
    let ids = |v: &[usize]| v.iter().map(|&o| uo.orders[o].id.clone()).collect::<Vec<_>>();
    let mut out = Vec::new();

    for g in &uo.groups {
        for &(b, t) in &g.pairs {
            out.push(Coupling::new(
                CouplingKind::ParentChildren,
                ids(&[b, t]),
                Some(CouplingRule::StartupPair),
            ));
        }
    }
    for g in uo.groups.iter().filter(|g| !g.per_step) {
        if g.members.len() >= 2 {
            out.push(Coupling::new(
                CouplingKind::IdenticalRatio,
                ids(&g.members),
                Some(CouplingRule::SameIndex),
            ));
        }
    }

    let in_pc: BTreeSet<usize> = uo.groups.iter().flat_map(|g| g.pairs.iter().flat_map(|&(b, t)| [b, t])).collect();
    let mut same_step: BTreeMap<(usize, i8), Vec<usize>> = BTreeMap::new();
    let mut bottoms: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for g in uo.groups.iter().filter(|g| !g.per_step) {
        for o in g.all() {
            if in_pc.contains(&o) {
                continue;
            }
            same_step.entry((uo.steps[o], uo.orders[o].sigma)).or_default().push(o);
        }
        for &b in &g.bottoms {
            bottoms.entry(uo.steps[b]).or_default().push(b);
        }
    }
    for members in same_step.values().filter(|m| m.len() >= 2) {
        out.push(Coupling::new(CouplingKind::Exclusion, ids(members), Some(CouplingRule::SameStep)));
    }
    for members in bottoms.values().filter(|m| m.len() >= 2) {
        out.push(Coupling::new(
            CouplingKind::Exclusion,
            ids(members),
            Some(CouplingRule::StartupOverlap),
        ));
    }

    let mut pairs = BTreeSet::new();
    for g in uo.groups.iter().filter(|g| !g.per_step) {
        let edges = [
            (g.span.first, g.span.first.checked_sub(1)),
            (g.span.last, Some(g.span.last + 1)),
        ];
        for (edge, neighbour) in edges {
            let Some(n) = neighbour else { continue };
            for a in g.representatives_at(edge, &uo.steps) {
                for b in 0..uo.orders.len() {
                    if uo.steps[b] == n && uo.orders[b].sigma != uo.orders[a].sigma {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    for (a, b) in pairs {
        out.push(Coupling::new(CouplingKind::Exclusion, ids(&[a, b]), Some(CouplingRule::Successive)));
    }

    let mut pairs = BTreeSet::new();
    for (gi, g) in uo.groups.iter().enumerate().filter(|(_, g)| g.completely_exclusive) {
        if g.per_step {
            for a in g.all() {
                for b in 0..uo.orders.len() {
                    if uo.steps[b] != uo.steps[a] && uo.orders[b].sigma == uo.orders[a].sigma {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
        } else {
            for (hi, h) in uo.groups.iter().enumerate() {
                if hi == gi || h.sigma() != g.sigma() || h.per_step {
                    continue;
                }
                for &a in g.representatives() {
                    for &b in h.representatives() {
                        if a != b {
                            pairs.insert((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
    }
    for (a, b) in pairs {
        out.push(Coupling::new(
            CouplingKind::Exclusion,
            ids(&[a, b]),
            Some(CouplingRule::CompletelyExclusive),
        ));
    }
    out
}
