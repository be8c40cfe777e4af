use crate::model::{Direction, Horizon, Minutes, RatioTable, Series};
use crate::scalar::Scalar;

/// Cost a TSO expects to pay for balancing outside the studied market.
pub trait AlternativeCost<S: Scalar> {
    /// Cost in euros of covering `q` MW (positive upward) during one hour at
    /// market step `t`; `None` when the alternative cannot cover it.
    fn cost(&mut self, q: S, t: Minutes) -> Option<S>;

    /// Cost of `volume` MW in a given direction.
    fn cost_dir(&mut self, dir: Direction, volume: S, t: Minutes) -> Option<S> {
        let v = volume.abs();
        match dir {
            Direction::Up => self.cost(v, t),
            Direction::Down => self.cost(-v, t),
        }
    }
}

/// Expected price of a later market: day-ahead price times the banded ratio.
pub fn mfrr_price<S: Scalar>(day_ahead: S, table: &RatioTable<S>, q: S) -> S {
    let band = table.band(q.abs());
    let ratio = if q >= S::zero() { band.up } else { band.down };
    day_ahead * ratio
}

/// `sigma_q * q * price`, i.e. `|q|` times the expected price.
pub fn mfrr_cost<S: Scalar>(day_ahead: S, table: &RatioTable<S>, q: S) -> S {
    let sigma = if q >= S::zero() { S::one() } else { -S::one() };
    sigma * q * mfrr_price(day_ahead, table, q)
}

/// Later market (mFRR) taken as the alternative.
#[derive(Debug, Clone)]
pub struct MfrrAlternative<S> {
    pub horizon: Horizon,
    pub day_ahead: Series<S>,
    pub table: RatioTable<S>,
    pub dt: Minutes,
}

impl<S: Scalar> AlternativeCost<S> for MfrrAlternative<S> {
    fn cost(&mut self, q: S, t: Minutes) -> Option<S> {
        let lambda = self.day_ahead.mean(&self.horizon, t, t + self.dt);
        Some(mfrr_cost(lambda, &self.table, q))
    }
}

/// Alternative with a constant marginal cost, mostly for tests.
#[derive(Debug, Clone, Copy)]
pub struct LinearAlternative<S> {
    pub up: S,
    pub down: S,
}

impl<S: Scalar> AlternativeCost<S> for LinearAlternative<S> {
    fn cost(&mut self, q: S, _t: Minutes) -> Option<S> {
        Some(if q >= S::zero() { q * self.up } else { -q * self.down })
    }
}
