//! Minute-resolution time axis, market grids and piecewise-constant series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minutes since the scenario epoch.
pub type Minutes = i64;

pub const MINUTES_PER_DAY: Minutes = 1440;

/// Uniform grid of market time steps `[t_start, t_start + dt, .., t_end - dt]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: Minutes,
    pub dt: Minutes,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t_start: Minutes, t_end: Minutes, dt: Minutes) -> Result<Self> {
        if dt <= 0 {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if t_end <= t_start {
            return Err(Error::Config(format!(
                "frame end {t_end} is not after start {t_start}"
            )));
        }
        if (t_end - t_start) % dt != 0 {
            return Err(Error::Config(format!(
                "frame [{t_start}, {t_end}) is not a multiple of dt={dt}"
            )));
        }
        Ok(TimeGrid {
            t_start,
            dt,
            len: ((t_end - t_start) / dt) as usize,
        })
    }

    pub fn t_end(&self) -> Minutes {
        self.t_start + self.len as Minutes * self.dt
    }

    /// Start time of step `k`; `k` may lie outside the grid.
    pub fn time(&self, k: i64) -> Minutes {
        self.t_start + k * self.dt
    }

    pub fn steps(&self) -> Vec<Minutes> {
        (0..self.len as i64).map(|k| self.time(k)).collect()
    }

    pub fn position(&self, t: Minutes) -> Option<usize> {
        let off = t - self.t_start;
        if off < 0 || off % self.dt != 0 {
            return None;
        }
        let k = (off / self.dt) as usize;
        (k < self.len).then_some(k)
    }

    pub fn duration(&self) -> Minutes {
        self.len as Minutes * self.dt
    }

    /// Number of whole steps covering `minutes` (rounded up).
    pub fn steps_for(&self, minutes: Minutes) -> i64 {
        if minutes <= 0 {
            0
        } else {
            (minutes + self.dt - 1) / self.dt
        }
    }
}

/// Base resolution on which all scenario time series are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    pub start: Minutes,
    pub dt: Minutes,
    pub len: usize,
}

impl Horizon {
    pub fn end(&self) -> Minutes {
        self.start + self.len as Minutes * self.dt
    }

    fn clamp_index(&self, i: i64) -> usize {
        i.clamp(0, self.len.saturating_sub(1) as i64) as usize
    }

    /// Whether a market grid can be written back onto this horizon exactly.
    pub fn aligned(&self, grid: &TimeGrid) -> bool {
        grid.dt % self.dt == 0 && (grid.t_start - self.start) % self.dt == 0
    }
}

/// A time series on the scenario horizon, either constant or one value per base step.
///
/// Lookups outside the horizon extend the nearest edge value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "S: Scalar")]
pub enum Series<S> {
    Const(S),
    Values(Vec<S>),
}

impl<S: Scalar> Default for Series<S> {
    fn default() -> Self {
        Series::Const(S::zero())
    }
}

impl<S: Scalar> Series<S> {
    pub fn constant(v: S) -> Self {
        Series::Const(v)
    }

    fn raw(&self, h: &Horizon, i: i64) -> S {
        match self {
            Series::Const(v) => *v,
            Series::Values(vs) if vs.is_empty() => S::zero(),
            Series::Values(vs) => vs[h.clamp_index(i).min(vs.len() - 1)],
        }
    }

    /// Value of the base step containing `t`.
    pub fn at(&self, h: &Horizon, t: Minutes) -> S {
        self.raw(h, (t - h.start).div_euclid(h.dt))
    }

    /// Time-weighted mean over `[t0, t1)`.
    pub fn mean(&self, h: &Horizon, t0: Minutes, t1: Minutes) -> S {
        if let Series::Const(v) = self {
            return *v;
        }
        if t1 <= t0 {
            return self.at(h, t0);
        }
        let first = (t0 - h.start).div_euclid(h.dt);
        let last = (t1 - 1 - h.start).div_euclid(h.dt);
        if first == last {
            return self.raw(h, first);
        }
        let mut acc = S::zero();
        for i in first..=last {
            let a = (h.start + i * h.dt).max(t0);
            let b = (h.start + (i + 1) * h.dt).min(t1);
            acc = acc + self.raw(h, i) * S::from_int(b - a);
        }
        acc / S::from_int(t1 - t0)
    }

    /// Expands a constant into one value per base step.
    pub fn densify(&mut self, h: &Horizon) {
        if let Series::Const(v) = *self {
            *self = Series::Values(vec![v; h.len]);
        }
    }

    /// Adds `delta` to every base step inside `[t0, t1)`.
    pub fn add_over(&mut self, h: &Horizon, t0: Minutes, t1: Minutes, delta: S) {
        if delta == S::zero() {
            return;
        }
        self.densify(h);
        if let Series::Values(vs) = self {
            for (i, v) in vs.iter_mut().enumerate() {
                let a = h.start + i as Minutes * h.dt;
                if a >= t0 && a < t1 {
                    *v = *v + delta;
                }
            }
        }
    }

    pub fn values(&self, h: &Horizon) -> Vec<S> {
        (0..h.len as i64).map(|i| self.raw(h, i)).collect()
    }

    pub fn len_matches(&self, h: &Horizon) -> bool {
        match self {
            Series::Const(_) => true,
            Series::Values(vs) => vs.len() == h.len,
        }
    }

    pub fn iter_values(&self) -> Box<dyn Iterator<Item = S> + '_> {
        match self {
            Series::Const(v) => Box::new(std::iter::once(*v)),
            Series::Values(vs) => Box::new(vs.iter().copied()),
        }
    }
}
