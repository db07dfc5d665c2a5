//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum UbmError {
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix entries must be finite (found NaN or infinity at ({row}, {col}))")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |M - M*| = {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not unitary: ||M*M - I||_F = {defect:.3e} exceeds {tol:.1e}")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("matrix is not nonnegative definite: min eigenvalue {min_eigenvalue:.3e}")]
    NotNonnegative { min_eigenvalue: f64 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("eigendecomposition failed: {0}")]
    EigFailed(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("matrix file `{path}`: {reason}")]
    MatrixFile { path: String, reason: String },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, UbmError>;
