use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("eigensolver did not converge within {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("matrix dimension {n} exceeds the full-spectrum cap {cap}")]
    SpectrumCapExceeded { n: usize, cap: usize },

    #[error("tridiagonal QL iteration failed to converge at eigenvalue index {0}")]
    QlFailure(usize),

    #[error("numerical failure at iteration {iteration}: {message}")]
    NumericalFailure { iteration: usize, message: String },

    #[error("projection produced the zero vector: every entry was clipped away")]
    ProjectionFailure,

    #[error("secular equation: the atom at the largest location has zero weight, no root is bracketed beyond it")]
    SecularTopWeightZero,

    #[error("matrix is not symmetric: max |a(i,j) - a(j,i)| = {0:.3e}")]
    Asymmetric(f64),

    #[error("invalid file format: {0}")]
    InvalidFormat(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
