use std::fmt;

use serde::{Deserialize, Serialize};

/// One failed dataset invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Location inside the scenario document, e.g. `units[3].p_min`.
    pub path: String,
    pub rule: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dataset has {} violation(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Validation(Vec<Violation>),
    #[error("unit {unit} has type {found}, expected {expected}")]
    InvalidUnitType {
        unit: String,
        found: String,
        expected: &'static str,
    },
    #[error("clearing infeasible under couplings {0:?}")]
    InfeasibleClearing(Vec<usize>),
    #[error("brute-force oracle limited to 12 orders, got {0}")]
    OracleTooLarge(usize),
    #[error("unknown reference: {0}")]
    Referential(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
