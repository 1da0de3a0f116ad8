//! Crate-wide error type and result alias.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while sampling, embedding, or estimating.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is structurally invalid (shape, range, ordering).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A connectivity matrix has a negative eigenvalue beyond tolerance, so no
    /// real latent-position factorization exists.
    #[error("matrix is not non-negative definite (offending eigenvalue {eigenvalue:e})")]
    NotNonNegativeDefinite { eigenvalue: f64 },

    /// Input data carries too little geometric information for the operation
    /// (e.g. a rank-deficient point cloud where a full-dimensional one is needed).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The iterative eigensolver exhausted its iteration budget.
    #[error(
        "eigensolver did not converge in {iterations} iterations (worst residual {residual:e})"
    )]
    EigenNonConvergence { iterations: usize, residual: f64 },

    /// The Dirichlet likelihood maximizer exhausted its iteration budget or ran
    /// into an unbounded likelihood.
    #[error("dirichlet maximum likelihood did not converge ({iterations} iterates)")]
    MleNonConvergence { iterations: usize },

    /// A text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
