//! Order construction and pricing.

use super::available::{AvailableRange, UnitView};
use super::index::{IndexKind, StepSpan};
use super::storage::hydro_fragments;
use super::thermal::ThermalIndex;
use crate::model::{Direction, Order, OrderKind, UnitType};
use crate::scalar::Scalar;

/// Orders of one logical index (or one reservoir step and direction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderGroup {
    pub kind: IndexKind,
    pub span: StepSpan,
    /// Orders moving together: normal orders, shutdown orders or startup tops.
    pub members: Vec<usize>,
    /// Startup bottoms, one per step.
    pub bottoms: Vec<usize>,
    /// `(bottom, top)` pairs of a startup index.
    pub pairs: Vec<(usize, usize)>,
    pub completely_exclusive: bool,
    /// Reservoir units are formulated step by step, without indexes.
    pub per_step: bool,
}

impl OrderGroup {
    fn new(kind: IndexKind, span: StepSpan, completely_exclusive: bool, per_step: bool) -> Self {
        OrderGroup {
            kind,
            span,
            members: Vec::new(),
            bottoms: Vec::new(),
            pairs: Vec::new(),
            completely_exclusive,
            per_step,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty() && self.bottoms.is_empty()
    }

    pub fn sigma(&self) -> i8 {
        self.kind.sigma()
    }

    /// Orders standing for the index at a given step: bottoms for startups.
    pub fn representatives_at(&self, step: usize, steps: &[usize]) -> Vec<usize> {
        let pool = if self.bottoms.is_empty() {
            &self.members
        } else {
            &self.bottoms
        };
        pool.iter().copied().filter(|&o| steps[o] == step).collect()
    }

    pub fn representatives(&self) -> &[usize] {
        if self.bottoms.is_empty() {
            &self.members
        } else {
            &self.bottoms
        }
    }

    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.bottoms.iter().chain(self.members.iter()).copied()
    }
}

/// Orders of one unit with their market step and logical grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitOrders<S> {
    pub orders: Vec<Order<S>>,
    pub steps: Vec<usize>,
    pub groups: Vec<OrderGroup>,
}

impl<S: Scalar> Default for UnitOrders<S> {
    fn default() -> Self {
        UnitOrders {
            orders: Vec::new(),
            steps: Vec::new(),
            groups: Vec::new(),
        }
    }
}

impl<S: Scalar> UnitOrders<S> {
    fn push(&mut self, order: Order<S>, step: usize) -> usize {
        self.orders.push(order);
        self.steps.push(step);
        self.orders.len() - 1
    }

    fn close(&mut self, g: OrderGroup) {
        if !g.is_empty() {
            self.groups.push(g);
        }
    }
}

/// Order price of a thermal unit: variable cost plus the startup cost spread
/// over the energy of the index, added (`sigma_su = 1`) or saved (`-1`).
pub fn thermal_price<S: Scalar>(c_var: S, c_su: S, sigma_su: i8, q: S, duration_min: i64) -> S {
    if sigma_su == 0 || q <= S::zero() {
        return c_var;
    }
    let hours = S::from_int(duration_min) / S::lit(60.0);
    c_var + S::from_int(sigma_su as i64) * c_su / (q * hours)
}

/// An order may be emitted when its maximum is positive and not below its minimum.
pub fn emits<S: Scalar>(q_min: S, q_max: S) -> bool {
    q_max > S::tol() && q_max >= q_min - S::tol()
}

fn id_for<S: Scalar>(v: &UnitView<S>, kind: IndexKind, span: StepSpan, k: usize) -> String {
    format!(
        "{}.{}.{}-{}.{}",
        v.unit.id,
        kind.tag(),
        v.time(span.first as i64),
        v.time(span.last as i64),
        v.time(k as i64)
    )
}

fn base_order<S: Scalar>(
    v: &UnitView<S>,
    id: String,
    area: &str,
    k: usize,
    sigma: i8,
    kind: OrderKind,
    price: S,
    q_min: S,
    q_max: S,
) -> Order<S> {
    let t = v.time(k as i64);
    Order {
        id,
        unit_id: Some(v.unit.id.clone()),
        area_id: area.to_string(),
        price,
        q_min: q_min.pos().min(q_max),
        q_max,
        t_start: t,
        t_end: t + v.dt(),
        t_ex: v.t_ex(),
        sigma,
        is_tso: false,
        kind,
        q_acc: S::zero(),
        accepted: false,
    }
}

fn direction(kind: IndexKind) -> Direction {
    match kind {
        IndexKind::Up => Direction::Up,
        IndexKind::Down | IndexKind::Shutdown => Direction::Down,
    }
}

/// Orders of a thermal index.
pub fn build_thermal<S: Scalar>(v: &UnitView<S>, ti: &ThermalIndex<S>, area: &str, out: &mut UnitOrders<S>) {
    let u = v.unit;
    let span = ti.span;
    let duration = span.len() as i64 * v.dt();
    let exclusive = u.d_min_stable > v.dt();
    let mut g = OrderGroup::new(ti.kind, span, exclusive, false);
    let sigma = ti.kind.sigma();
    match ti.kind {
        IndexKind::Shutdown => {
            if !ti.flags.delta_sd {
                return;
            }
            let q_ref = span
                .steps()
                .map(|k| v.plan(k as i64))
                .fold(S::infinity(), S::min);
            if !emits(q_ref, q_ref) {
                return;
            }
            let price = thermal_price(u.c_var, u.c_su, ti.flags.sigma_su, q_ref, duration);
            for k in span.steps() {
                let q = v.plan(k as i64);
                let o = base_order(v, id_for(v, ti.kind, span, k), area, k, sigma, OrderKind::Shutdown, price, q, q);
                g.members.push(out.push(o, k));
            }
        }
        _ => {
            let (lo, hi) = ti.range.bounds(direction(ti.kind));
            if !emits(lo, hi) {
                return;
            }
            if ti.kind == IndexKind::Up && ti.flags.delta_su && lo > S::tol() {
                let bottom_price = thermal_price(u.c_var, u.c_su, ti.flags.sigma_su, lo, duration);
                for k in span.steps() {
                    let id = id_for(v, ti.kind, span, k);
                    let b = base_order(
                        v,
                        format!("{id}.b"),
                        area,
                        k,
                        sigma,
                        OrderKind::StartupBottom,
                        bottom_price,
                        lo,
                        lo,
                    );
                    let b = out.push(b, k);
                    g.bottoms.push(b);
                    let top = hi - lo;
                    if top > S::tol() {
                        let t = base_order(
                            v,
                            format!("{id}.t"),
                            area,
                            k,
                            sigma,
                            OrderKind::StartupTop,
                            u.c_var,
                            S::zero(),
                            top,
                        );
                        let t = out.push(t, k);
                        g.members.push(t);
                        g.pairs.push((b, t));
                    }
                }
            } else {
                let price = thermal_price(u.c_var, u.c_su, ti.flags.sigma_su, hi, duration);
                for k in span.steps() {
                    let o = base_order(v, id_for(v, ti.kind, span, k), area, k, sigma, OrderKind::Normal, price, lo, hi);
                    g.members.push(out.push(o, k));
                }
            }
        }
    }
    out.close(g);
}

/// Orders of a wind, PV or flexible load index: one order per step at the variable cost.
pub fn build_general<S: Scalar>(
    v: &UnitView<S>,
    span: StepSpan,
    kind: IndexKind,
    range: &AvailableRange<S>,
    area: &str,
    out: &mut UnitOrders<S>,
) {
    let (lo, hi) = range.bounds(direction(kind));
    if !emits(lo, hi) {
        return;
    }
    let mut g = OrderGroup::new(kind, span, false, false);
    for k in span.steps() {
        let o = base_order(v, id_for(v, kind, span, k), area, k, kind.sigma(), OrderKind::Normal, v.unit.c_var, lo, hi);
        g.members.push(out.push(o, k));
    }
    out.close(g);
}

/// Orders of a hydraulic or storage unit on one step and direction.
///
/// Hydraulic volume is split over the power fragments it crosses, each
/// priced at the water value plus the fragment spread.
pub fn build_reservoir<S: Scalar>(
    v: &UnitView<S>,
    k: usize,
    kind: IndexKind,
    range: &AvailableRange<S>,
    completely_exclusive: bool,
    area: &str,
    out: &mut UnitOrders<S>,
) {
    let u = v.unit;
    let (lo, hi) = range.bounds(direction(kind));
    if !emits(lo, hi) {
        return;
    }
    let span = StepSpan::single(k);
    let mut g = OrderGroup::new(kind, span, completely_exclusive, true);
    let id = format!("{}.{}.{}", u.id, kind.tag(), v.time(k as i64));
    if u.unit_type == UnitType::Hydraulic {
        let t = v.time(k as i64);
        let wv = match (&u.water_values, v.stored(k as i64)) {
            (Some(table), Some(e)) => table.value(t, e),
            (Some(table), None) => table.value(t, S::zero()),
            (None, _) => u.c_var,
        };
        let p_max = v.p_max(k as i64);
        for (i, q) in hydro_fragments(p_max, v.plan(k as i64), hi, kind == IndexKind::Up) {
            let spread = u
                .spreads
                .as_ref()
                .and_then(|s| s.get(i).copied())
                .unwrap_or_else(S::zero);
            let o = base_order(v, format!("{id}.f{i}"), area, k, kind.sigma(), OrderKind::Normal, wv + spread, S::zero(), q);
            g.members.push(out.push(o, k));
        }
    } else {
        let o = base_order(v, id, area, k, kind.sigma(), OrderKind::Normal, u.c_var, lo, hi);
        g.members.push(out.push(o, k));
    }
    out.close(g);
}
