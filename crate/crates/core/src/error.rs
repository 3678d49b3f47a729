use thiserror::Error;

/// Errors raised by problem construction, prox operators, solvers and bound calculators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("groups overlap at index {0}; use the overlapping row/column operator instead")]
    OverlappingGroups(usize),

    #[error("inner solver did not reach the gap target after {sweeps} sweeps (last gap {last_gap:e})")]
    NonConvergence { sweeps: usize, last_gap: f64 },

    #[error("duality gap {0:e} is negative beyond round-off")]
    NegativeGap(f64),

    #[error("divergence at iteration {k}: objective {value:e} exceeds the initial value {initial:e} by more than 1e12")]
    Divergence { k: usize, value: f64, initial: f64 },

    #[error("Lipschitz estimate {0:e} exceeds the 1e30 guard")]
    LipschitzOverflow(f64),

    #[error("reference solve did not converge within {iterations} iterations (gradient-mapping norm {residual:e})")]
    ReferenceNotConverged { iterations: usize, residual: f64 },

    #[error("empty sequence")]
    EmptySequence,

    #[error("sequence is not nondecreasing at index {0}")]
    NotNondecreasing(usize),

    #[error("nonpositive suboptimality {value:e} at k = {k} inside the fitting window")]
    NonpositiveSuboptimality { k: usize, value: f64 },

    #[error("matrix import failed: {0}")]
    Import(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
