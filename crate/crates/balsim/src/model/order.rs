use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::time::Minutes;
use crate::error::Violation;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Normal,
    StartupBottom,
    StartupTop,
    Shutdown,
}

/// A balancing energy order.
///
/// `sigma` is +1 for a purchase and -1 for a sale. BSP upward offers are sales.
/// TSO orders carry the direction of the need instead: an upward need is
/// written with `sigma = -1`, so the clearing places TSO orders on the side
/// opposite to their sign (see [`Order::side`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Order<S> {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_id: Option<String>,
    /// Clearing zone (the control area the order is cleared in).
    pub area_id: String,
    pub price: S,
    pub q_min: S,
    pub q_max: S,
    pub t_start: Minutes,
    pub t_end: Minutes,
    pub t_ex: Minutes,
    pub sigma: i8,
    #[serde(default)]
    pub is_tso: bool,
    #[serde(default = "normal_kind")]
    pub kind: OrderKind,
    #[serde(default)]
    pub q_acc: S,
    #[serde(default)]
    pub accepted: bool,
}

fn normal_kind() -> OrderKind {
    OrderKind::Normal
}

impl<S: Scalar> Order<S> {
    /// Market side used by the clearing: +1 buys energy, -1 sells it.
    pub fn side(&self) -> i8 {
        if self.is_tso {
            -self.sigma
        } else {
            self.sigma
        }
    }

    pub fn duration_hours(&self) -> S {
        S::from_int(self.t_end - self.t_start) / S::lit(60.0)
    }

    pub fn is_divisible(&self) -> bool {
        self.q_max > self.q_min
    }

    /// Upward orders raise the generation of a unit (or cover an upward need).
    pub fn is_upward(&self) -> bool {
        self.sigma < 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CouplingKind {
    Exclusion,
    ParentChildren,
    IdenticalRatio,
}

/// Formulation rule that produced a coupling, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    StartupPair,
    SameIndex,
    SameStep,
    Successive,
    CompletelyExclusive,
    StartupOverlap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coupling {
    pub kind: CouplingKind,
    /// For parent-children couplings the first id is the parent.
    pub order_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<CouplingRule>,
}

impl Coupling {
    pub fn new(kind: CouplingKind, order_ids: Vec<String>, rule: Option<CouplingRule>) -> Self {
        Coupling {
            kind,
            order_ids,
            rule,
        }
    }
}

/// Orders and couplings submitted to one clearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OrderBook<S> {
    pub orders: Vec<Order<S>>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
}

impl<S: Scalar> Default for OrderBook<S> {
    fn default() -> Self {
        OrderBook {
            orders: Vec::new(),
            couplings: Vec::new(),
        }
    }
}

impl<S: Scalar> OrderBook<S> {
    pub fn index(&self) -> BTreeMap<&str, usize> {
        self.orders
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id.as_str(), i))
            .collect()
    }

    /// Structural checks required before clearing.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, o) in self.orders.iter().enumerate() {
            let path = format!("orders[{i}]");
            if !seen.insert(o.id.as_str()) {
                out.push(Violation::new(&path, "duplicate order id"));
            }
            if !(o.q_min >= S::zero() && o.q_min <= o.q_max) {
                out.push(Violation::new(&path, "quantities must satisfy 0 <= q_min <= q_max"));
            }
            if o.t_start >= o.t_end {
                out.push(Violation::new(&path, "order must end after it starts"));
            }
            if o.sigma != 1 && o.sigma != -1 {
                out.push(Violation::new(&path, "sigma must be +1 or -1"));
            }
            if !o.price.is_finite() {
                out.push(Violation::new(&path, "price must be finite"));
            }
        }
        let idx = self.index();
        let mut in_ratio = BTreeSet::new();
        for (i, c) in self.couplings.iter().enumerate() {
            let path = format!("couplings[{i}]");
            if c.order_ids.len() < 2 {
                out.push(Violation::new(&path, "coupling needs at least two orders"));
            }
            let mut members = BTreeSet::new();
            for id in &c.order_ids {
                if !idx.contains_key(id.as_str()) {
                    out.push(Violation::new(&path, format!("unknown order id {id}")));
                }
                if !members.insert(id.as_str()) {
                    out.push(Violation::new(&path, format!("order {id} listed twice")));
                }
            }
            match c.kind {
                CouplingKind::ParentChildren => {
                    if let Some(&p) = c.order_ids.first().and_then(|id| idx.get(id.as_str())) {
                        if self.orders[p].q_min <= S::zero() {
                            out.push(Violation::new(&path, "parent order needs q_min > 0"));
                        }
                    }
                }
                CouplingKind::IdenticalRatio => {
                    for id in &c.order_ids {
                        if !in_ratio.insert(id.as_str()) {
                            out.push(Violation::new(
                                &path,
                                format!("order {id} belongs to two identical-ratio couplings"),
                            ));
                        }
                    }
                }
                CouplingKind::Exclusion => {}
            }
        }
        out
    }
}
