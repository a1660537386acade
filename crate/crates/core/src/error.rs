use thiserror::Error;

/// Errors surfaced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stated precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A covariance matrix could not be factorized.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
