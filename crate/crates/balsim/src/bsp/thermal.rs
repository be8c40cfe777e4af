//! Thermal operating constraints on combinatorial indexes.
//!
//! Step `k` below is a market step index relative to the frame start; the
//! neighbours `first - 1` and `last + 1` may lie outside the frame.

use serde::{Deserialize, Serialize};

use super::available::{step_range, AvailableRange, UnitView};
use super::index::{IndexKind, StepSpan};
use crate::model::Direction;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThermalFlags {
    /// Upward orders of the index are startup orders.
    pub delta_su: bool,
    /// Shutdown orders can be formulated on the index.
    pub delta_sd: bool,
    /// +1 when the order adds a startup cost, -1 when it saves one.
    pub sigma_su: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StartupCase {
    /// ON before and after: cancels a shutdown.
    OnBoth,
    /// ON before, OFF after: delays a shutdown.
    OnBeforeOffAfter,
    /// OFF before, ON after: advances a startup.
    OffBeforeOnAfter,
    /// Already ramping towards minimum power inside the index.
    MidStartup,
    /// OFF on both sides: a genuine startup.
    OffBoth,
}

impl StartupCase {
    pub fn number(self) -> u8 {
        match self {
            StartupCase::OnBoth => 1,
            StartupCase::OnBeforeOffAfter => 2,
            StartupCase::OffBeforeOnAfter => 3,
            StartupCase::MidStartup => 4,
            StartupCase::OffBoth => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShutdownCase {
    /// OFF before and after: cancels a startup.
    OffBoth,
    /// OFF before, ON after: delays a startup.
    OffBeforeOnAfter,
    /// ON before, OFF after: advances a shutdown.
    OnBeforeOffAfter,
    MidStartup,
    /// ON on both sides: a stop and a restart.
    OnBoth,
}

impl ShutdownCase {
    pub fn number(self) -> u8 {
        match self {
            ShutdownCase::OffBoth => 1,
            ShutdownCase::OffBeforeOnAfter => 2,
            ShutdownCase::OnBeforeOffAfter => 3,
            ShutdownCase::MidStartup => 4,
            ShutdownCase::OnBoth => 5,
        }
    }
}

fn bounds(span: StepSpan) -> (i64, i64) {
    (span.first as i64, span.last as i64)
}

fn any_on<S: Scalar>(v: &UnitView<S>, lo: i64, hi: i64) -> bool {
    (lo..=hi).any(|k| v.is_on(k))
}

fn any_off<S: Scalar>(v: &UnitView<S>, lo: i64, hi: i64) -> bool {
    (lo..=hi).any(|k| v.is_off(k))
}

/// Some step of the index is between zero and minimum power.
pub fn mid_startup<S: Scalar>(v: &UnitView<S>, span: StepSpan) -> bool {
    span.steps().any(|k| {
        let p = v.plan(k as i64);
        p > S::tol() && p < v.p_min(k as i64) - S::tol()
    })
}

/// Intersection of the single-step ranges over the index.
pub fn index_range<S: Scalar>(v: &UnitView<S>, span: StepSpan) -> AvailableRange<S> {
    span.steps()
        .map(|k| step_range(v, k))
        .reduce(|a, b| a.intersect(&b))
        .unwrap_or_else(AvailableRange::zero)
}

/// Ramping limits at both ends of a running index.
///
/// The end-of-index bound is applied as written, `R - (P[last+1] - P[last])`,
/// together with its mirror `R + (P[last+1] - P[last])`, so the return to the
/// plan after the index respects the limit whichever way the plan moves.
/// Sides adjoining an OFF step are skipped: starts and stops are not ramp limited.
pub fn thermal_ramping<S: Scalar>(
    range: AvailableRange<S>,
    v: &UnitView<S>,
    span: StepSpan,
) -> AvailableRange<S> {
    let (f, l) = bounds(span);
    let mut r = range;
    if v.is_on(f - 1) {
        if let Some(ramp) = v.ramp(f) {
            let step = v.plan(f) - v.plan(f - 1);
            r.cap(Direction::Up, ramp - step);
            r.cap(Direction::Down, ramp + step);
        }
    }
    if v.is_on(l + 1) {
        if let Some(ramp) = v.ramp(l) {
            let step = v.plan(l + 1) - v.plan(l);
            r.cap(Direction::Up, ramp - step);
            r.cap(Direction::Up, ramp + step);
            r.cap(Direction::Down, ramp + step);
            r.cap(Direction::Down, ramp - step);
        }
    }
    r.normalized()
}

/// Result of the startup analysis of an all-OFF upward index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StartupOutcome<S> {
    pub range: AvailableRange<S>,
    pub flags: ThermalFlags,
    pub case: StartupCase,
}

/// Startup cases of an upward index on which the unit is planned OFF.
///
/// The returned upward range is a power level: the unit runs between
/// `q_up_min` and `q_up_max` on the index.
pub fn thermal_startup_case<S: Scalar>(v: &UnitView<S>, span: StepSpan) -> StartupOutcome<S> {
    let (f, l) = bounds(span);
    let mut flags = ThermalFlags {
        delta_su: true,
        delta_sd: false,
        sigma_su: 0,
    };
    let infeasible = |flags: ThermalFlags, case| StartupOutcome {
        range: AvailableRange::zero(),
        flags: ThermalFlags {
            delta_su: false,
            ..flags
        },
        case,
    };
    if mid_startup(v, span) {
        return infeasible(flags, StartupCase::MidStartup);
    }
    let idx = index_range(v, span);
    let up_max = idx.q_up_max;
    let p_min = span.steps().map(|k| v.p_min(k as i64)).fold(S::zero(), S::max);
    let p_max = span
        .steps()
        .map(|k| v.p_max(k as i64))
        .fold(S::infinity(), S::min)
        .min(up_max);
    let before = v.plan(f - 1);
    let after = v.plan(l + 1);
    let on_before = v.is_on(f - 1);
    let on_after = v.is_on(l + 1);
    let n_off = v.steps_for(v.unit.d_min_off);
    let n_su = v.steps_for(v.unit.d_su);
    let lead = v.time(f) - v.t_ex();
    // The startup sequence runs after the results are known, on a stopped unit.
    let no_time_to_start = lead < v.unit.d_su || any_on(v, f - n_su, f - 1);
    let ramp = v.ramp(f);
    let unbounded = S::infinity();

    let (case, lo, hi) = match (on_before, on_after) {
        (true, true) => {
            let case = StartupCase::OnBoth;
            if let Some(per_min) = v.ramp_per_min(f) {
                if (after - before).abs() > S::lit(2.0) * per_min * S::lit(60.0) {
                    return infeasible(flags, case);
                }
            }
            let r = ramp.unwrap_or(unbounded);
            flags.sigma_su = -1;
            (case, p_min.max(before.max(after) - r), p_max.min(before.min(after) + r))
        }
        (true, false) => {
            let case = StartupCase::OnBeforeOffAfter;
            if any_on(v, l + 1, l + n_off) {
                return infeasible(flags, case);
            }
            flags.delta_su = false;
            let r = ramp.unwrap_or(unbounded);
            (case, p_min.max(before), p_max.min(before + r))
        }
        (false, true) => {
            let case = StartupCase::OffBeforeOnAfter;
            if no_time_to_start || any_on(v, f - n_off, f - 1) {
                return infeasible(flags, case);
            }
            flags.delta_su = false;
            let r = ramp.unwrap_or(unbounded);
            (case, p_min.max(after), p_max.min(after + r))
        }
        (false, false) => {
            let case = StartupCase::OffBoth;
            if no_time_to_start
                || any_on(v, f - n_off, f - 1)
                || any_on(v, l + 1, l + n_off)
                || (span.len() as i64 * v.dt()) < v.unit.d_min_on
            {
                return infeasible(flags, case);
            }
            flags.sigma_su = 1;
            (case, p_min, p_max)
        }
    };
    let mut range = AvailableRange::zero();
    if hi > S::tol() && hi >= lo - S::tol() {
        range.q_up_min = lo.min(hi);
        range.q_up_max = hi;
    } else {
        flags.delta_su = false;
        flags.sigma_su = 0;
    }
    StartupOutcome { range, flags, case }
}

/// Shutdown feasibility of an index on which the unit runs at or above minimum power.
pub fn thermal_shutdown_case<S: Scalar>(v: &UnitView<S>, span: StepSpan) -> (ThermalFlags, ShutdownCase) {
    let (f, l) = bounds(span);
    let mut flags = ThermalFlags {
        delta_su: false,
        delta_sd: true,
        sigma_su: 0,
    };
    if span.steps().any(|k| v.any_reserve(k as i64)) {
        flags.delta_sd = false;
    }
    if v.time(f) - v.t_ex() < v.unit.d_notice {
        flags.delta_sd = false;
    }
    let n_on = v.steps_for(v.unit.d_min_on);
    let case = if mid_startup(v, span) {
        flags.delta_sd = false;
        ShutdownCase::MidStartup
    } else {
        match (v.is_on(f - 1), v.is_on(l + 1)) {
            (false, false) => {
                flags.sigma_su = -1;
                ShutdownCase::OffBoth
            }
            (false, true) => {
                if any_off(v, l + 1, l + n_on) {
                    flags.delta_sd = false;
                }
                ShutdownCase::OffBeforeOnAfter
            }
            (true, false) => {
                if any_off(v, f - n_on, f - 1) {
                    flags.delta_sd = false;
                }
                ShutdownCase::OnBeforeOffAfter
            }
            (true, true) => {
                let span_min = span.len() as i64 * v.dt();
                if v.unit.d_su > v.dt()
                    || v.unit.d_min_off > span_min
                    || any_off(v, f - n_on, f - 1)
                    || any_off(v, l + 1, l + n_on)
                {
                    flags.delta_sd = false;
                }
                if flags.delta_sd {
                    flags.sigma_su = 1;
                }
                ShutdownCase::OnBoth
            }
        }
    };
    if !flags.delta_sd {
        flags.sigma_su = 0;
    }
    (flags, case)
}

/// Minimum stable power duration.
///
/// The plan must be stable around the index; an index shorter than the
/// minimum duration may only extend the neighbouring level as an indivisible
/// order of imposed size. The look-ahead compares against `P[last+1]`, the
/// level the unit returns to after the index.
pub fn stable_power<S: Scalar>(
    range: AvailableRange<S>,
    flags: &mut ThermalFlags,
    v: &UnitView<S>,
    span: StepSpan,
) -> AvailableRange<S> {
    let d = v.unit.d_min_stable;
    if d <= v.dt() {
        return range;
    }
    let n = v.steps_for(d);
    let (f, l) = bounds(span);
    let before = v.plan(f - 1);
    let after = v.plan(l + 1);
    let unstable_before = (f - 1 - n..=f - 1).any(|k| !v.plan(k).near(before));
    let unstable_after = (l + 1..=l + 1 + n).any(|k| !v.plan(k).near(after));
    if unstable_before || unstable_after {
        flags.delta_sd = false;
        return AvailableRange::zero();
    }
    if span.len() as i64 * v.dt() >= d {
        return range;
    }
    let first = v.plan(f);
    let last = v.plan(l);
    if !before.near(first) && !last.near(after) {
        return AvailableRange::zero();
    }
    let forced = if before > first && !before.near(first) {
        (Direction::Up, before - first)
    } else if before < first && !before.near(first) {
        (Direction::Down, first - before)
    } else if last < after && !last.near(after) {
        (Direction::Up, after - last)
    } else if last > after && !last.near(after) {
        (Direction::Down, last - after)
    } else {
        return AvailableRange::zero();
    };
    let (dir, q) = forced;
    let (lo, hi) = range.bounds(dir);
    let mut out = AvailableRange::zero();
    if q >= lo - S::tol() && q <= hi + S::tol() {
        out.set(dir, q, q);
    }
    out
}

/// Everything known about one thermal index after the constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ThermalIndex<S> {
    pub span: StepSpan,
    pub kind: IndexKind,
    pub range: AvailableRange<S>,
    pub flags: ThermalFlags,
    pub startup_case: Option<StartupCase>,
    pub shutdown_case: Option<ShutdownCase>,
}

/// Applies every thermal constraint to one index.
pub fn thermal_index<S: Scalar>(v: &UnitView<S>, span: StepSpan, kind: IndexKind) -> ThermalIndex<S> {
    let mut out = ThermalIndex {
        span,
        kind,
        range: AvailableRange::zero(),
        flags: ThermalFlags::default(),
        startup_case: None,
        shutdown_case: None,
    };
    let (f, l) = bounds(span);
    match kind {
        IndexKind::Shutdown => {
            let (mut flags, case) = thermal_shutdown_case(v, span);
            stable_power(AvailableRange::zero(), &mut flags, v, span);
            if !flags.delta_sd {
                flags.sigma_su = 0;
            }
            out.flags = flags;
            out.shutdown_case = Some(case);
        }
        IndexKind::Up if !mid_startup(v, span) && !any_on(v, f, l) => {
            let s = thermal_startup_case(v, span);
            let mut flags = s.flags;
            let range = stable_power(s.range, &mut flags, v, span);
            if !range.has(Direction::Up) {
                flags.delta_su = false;
                flags.sigma_su = 0;
            }
            out.range = range;
            out.flags = flags;
            out.startup_case = Some(s.case);
        }
        IndexKind::Up | IndexKind::Down => {
            if mid_startup(v, span) {
                out.startup_case = (kind == IndexKind::Up).then_some(StartupCase::MidStartup);
                return out;
            }
            if any_off(v, f, l) {
                return out;
            }
            let mut range = thermal_ramping(index_range(v, span), v, span);
            match kind {
                IndexKind::Up => range.zero_dn(),
                _ => range.zero_up(),
            }
            let mut flags = ThermalFlags::default();
            out.range = stable_power(range, &mut flags, v, span);
        }
    }
    out
}
