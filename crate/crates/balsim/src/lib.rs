//! Balancing energy market simulation.
//!
//! The crate covers the full chain of a European balancing market session:
//! BSP order formulation from unit schedules, TSO need orders, a coupled
//! combinatorial clearing, post-clearing write-back of activations and a
//! cost-minimising balancing mechanism used as a reference.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the crate root fix the scalar to `f64`.

pub mod aggregation;
pub mod bm;
pub mod bsp;
pub mod clearing;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod solver;
pub mod tso;

pub use error::{Error, Result, Violation};
pub use scalar::Scalar;

pub type Scenario = model::Scenario<f64>;
pub type Unit = model::Unit<f64>;
pub type Order = model::Order<f64>;
pub type OrderBook = model::OrderBook<f64>;
pub type Series = model::Series<f64>;
