use super::available::{AvailableRange, UnitView};
use crate::model::{Direction, GlobalParams, Minutes, UnitType, MINUTES_PER_DAY};
use crate::scalar::Scalar;

/// Number of equal power fragments of a hydraulic unit.
pub const HYDRO_FRAGMENTS: usize = 7;

/// End of the window over which reservoir levels must stay feasible.
///
/// After the day-ahead gate the next day is already scheduled, so the window
/// runs to the end of the next day; otherwise to the end of the current day.
pub fn storage_window_end(t_ex: Minutes, h_da_ex: u32) -> Minutes {
    let day_start = t_ex.div_euclid(MINUTES_PER_DAY) * MINUTES_PER_DAY;
    let hour = (t_ex - day_start) / 60;
    if hour > h_da_ex as Minutes {
        day_start + 2 * MINUTES_PER_DAY
    } else {
        day_start + MINUTES_PER_DAY
    }
}

/// Which directions were limited by the reservoir level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StorageBinding {
    pub up: bool,
    pub down: bool,
}

impl StorageBinding {
    pub fn get(&self, dir: Direction) -> bool {
        match dir {
            Direction::Up => self.up,
            Direction::Down => self.down,
        }
    }
}

/// Ramping, reservoir level and pump/turbine transition limits of a hydraulic
/// or storage unit on market step `k`.
///
/// Level caps use the paper's frame-wide bound and additionally keep every
/// base step of the storage window inside `[e_min, e_max]`.
pub fn hydro_storage_constraints<S: Scalar>(
    range: AvailableRange<S>,
    v: &UnitView<S>,
    k: i64,
    global: &GlobalParams<S>,
) -> (AvailableRange<S>, StorageBinding) {
    let mut r = range;
    if let Some(ramp) = v.ramp(k) {
        let into = v.plan(k) - v.plan(k - 1);
        let out = v.plan(k + 1) - v.plan(k);
        r.cap(Direction::Up, ramp - into);
        r.cap(Direction::Up, ramp - out);
        r.cap(Direction::Up, ramp + out);
        r.cap(Direction::Down, ramp + into);
        r.cap(Direction::Down, ramp + out);
        r.cap(Direction::Down, ramp - out);
    }
    r = r.normalized();

    let mut binding = StorageBinding::default();
    let u = v.unit;
    if let (Some(es), Some(emin), Some(emax)) = (&u.e_stored, &u.e_min, &u.e_max) {
        let h = v.horizon;
        let t0 = v.grid.t_start;
        let t1 = v.grid.t_end();
        let frame_hours = S::from_int(t1 - t0) / S::lit(60.0);
        let window_end = storage_window_end(v.t_ex(), global.h_da_ex).max(t1);
        let base = |t0: Minutes, t1: Minutes| {
            let mut out = Vec::new();
            let mut t = t0;
            while t < t1 {
                out.push(t);
                t += h.dt;
            }
            out
        };
        let frame = base(t0, t1);
        let window = base(t0, window_end);
        let e_lo = frame.iter().map(|&t| es.at(h, t)).fold(S::infinity(), S::min);
        let e_hi = frame.iter().map(|&t| es.at(h, t)).fold(S::neg_infinity(), S::max);
        let min_floor = window.iter().map(|&t| emin.at(h, t)).fold(S::neg_infinity(), S::max);
        let min_ceiling = window.iter().map(|&t| emax.at(h, t)).fold(S::infinity(), S::min);
        let slack_dn = window
            .iter()
            .map(|&t| es.at(h, t) - emin.at(h, t))
            .fold(S::infinity(), S::min);
        let slack_up = window
            .iter()
            .map(|&t| emax.at(h, t) - es.at(h, t))
            .fold(S::infinity(), S::min);
        let cap_up = ((e_lo - min_floor).min(slack_dn) / frame_hours).pos();
        let cap_dn = ((min_ceiling - e_hi).min(slack_up) / frame_hours).pos();
        if cap_up < r.q_up_max - S::tol() {
            binding.up = true;
            r.cap(Direction::Up, cap_up);
        }
        if cap_dn < r.q_dn_max - S::tol() {
            binding.down = true;
            r.cap(Direction::Down, cap_dn);
        }
        if cap_up <= S::tol() {
            binding.up = true;
        }
        if cap_dn <= S::tol() {
            binding.down = true;
        }
        r = r.normalized();
    }

    if u.unit_type == UnitType::PhsStorage && u.d_tran > v.dt() {
        let plan = v.plan(k);
        if plan < -S::tol() {
            r.cap(Direction::Up, plan.abs());
        } else if plan > S::tol() {
            r.cap(Direction::Down, plan.abs());
        }
        r = r.normalized();
    }
    (r, binding)
}

/// Splits a move from `plan` by `q` (upward when `up`) into the hydraulic
/// fragments it crosses. Returns `(fragment, volume)` pairs in walking order.
pub fn hydro_fragments<S: Scalar>(p_max: S, plan: S, q: S, up: bool) -> Vec<(usize, S)> {
    let mut out = Vec::new();
    if !(p_max > S::zero()) || q <= S::tol() {
        return out;
    }
    let w = p_max / S::from_int(HYDRO_FRAGMENTS as i64);
    let (lo, hi) = if up { (plan, plan + q) } else { (plan - q, plan) };
    let mut pieces: Vec<(usize, S)> = (0..HYDRO_FRAGMENTS)
        .filter_map(|i| {
            let a = w * S::from_int(i as i64);
            let b = if i + 1 == HYDRO_FRAGMENTS { p_max } else { a + w };
            let v = hi.min(b) - lo.max(a);
            (v > S::tol()).then_some((i, v))
        })
        .collect();
    if !up {
        pieces.reverse();
    }
    out.extend(pieces);
    out
}
