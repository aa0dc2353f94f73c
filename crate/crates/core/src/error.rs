use thiserror::Error;

/// Errors raised by the matrix kernels, divergences and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e}, largest {max_eig:e})")]
    NotPositiveDefinite { min_eig: f64, max_eig: f64 },

    #[error("invalid spectral box [{alpha}, {beta}]: need 0 < alpha <= beta")]
    InvalidBox { alpha: f64, beta: f64 },

    #[error("parameter out of range: {0}")]
    ParameterError(String),

    #[error("numerical error: {0}")]
    NumericalError(String),

    #[error("step size {eta} outside (0, {limit})")]
    InvalidStepSize { eta: f64, limit: f64 },

    #[error("invalid start: {0}")]
    InvalidStart(String),
}

pub type Result<T> = std::result::Result<T, Error>;
