use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
///
/// Failed identities that a checker is asked to measure are *not* errors;
/// they are reported through [`crate::report::Report`]. Errors are reserved for
/// malformed input, violated preconditions and resource limits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("tensor with {entries} complex entries exceeds the memory cap of {cap}")]
    MemoryCap { entries: usize, cap: usize },

    #[error("invalid multiplication table: {0}")]
    InvalidTable(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("bialgebra has no antipode")]
    NotHopf,

    #[error("series did not reach tolerance after {order} terms (achieved bound {bound:e})")]
    SeriesNotConverged { order: usize, bound: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("bialgebra axiom failed: {0}")]
    Axiom(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
