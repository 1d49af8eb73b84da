//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, BellError>;

#[derive(Debug, Error)]
pub enum BellError {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("party index {party} out of range for {parties} parties")]
    PartyOutOfRange { party: usize, parties: usize },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("matrix is not Hermitian (residual {residual:.3e} > tol {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("not a valid observable: {0}")]
    InvalidObservable(String),

    #[error("coefficients are not in the sign-vector family: entry {index} transforms to {value} (not ±1)")]
    NotInFamily { index: usize, value: f64 },

    #[error("table is signalling (max marginal deviation {deviation:.3e} > tol {tol:.3e}); joint-distribution test requires no-signalling data")]
    Signalling { deviation: f64, tol: f64 },

    #[error("joint device has inconsistent marginals: {0}")]
    InconsistentDevice(String),

    #[error("not a complete set of rank-1 orthogonal projectors: {0}")]
    NotProjectors(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
