//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable for power, energy and price quantities.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance used for feasibility and equality tests.
    const TOL: f64;

    /// Converts an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Converts an integer count or duration.
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer representable in scalar type")
    }

    /// Lossy conversion to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn tol() -> Self {
        Self::lit(Self::TOL)
    }

    /// Clamps negative values to zero.
    fn pos(self) -> Self {
        self.max(Self::zero())
    }

    /// Equality up to the scalar tolerance, scaled by magnitude.
    fn near(self, other: Self) -> bool {
        let scale = Self::one() + self.abs().max(other.abs());
        (self - other).abs() <= Self::tol() * scale
    }
}

impl Scalar for f32 {
    const TOL: f64 = 1e-4;
}

impl Scalar for f64 {
    const TOL: f64 = 1e-9;
}

/// Serde default helper returning one.
pub fn one<S: Scalar>() -> S {
    S::one()
}
