use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("quadrature tolerance not met: estimate {estimate:e}, error {error:e}, requested {requested:e}")]
    Tolerance {
        estimate: f64,
        error: f64,
        requested: f64,
    },

    #[error("inconsistent quadrature routes: {a:e} vs {b:e} (relative gap {gap:e})")]
    Inconsistency { a: f64, b: f64, gap: f64 },

    #[error("Gram matrix is singular beyond jitter (pivot {pivot:e})")]
    SingularGram { pivot: f64 },

    #[error("rejection budget exhausted after {proposals} proposals ({accepted} points accepted)")]
    RejectionBudget { proposals: u64, accepted: usize },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
