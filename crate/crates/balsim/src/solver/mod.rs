//! Linear and mixed binary programming helpers.

pub mod milp;
pub mod simplex;

pub use milp::{Cmp, Milp, MilpSolution};
pub use simplex::dense_lp;
