use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is numerically singular at index {index}")]
    Singular { index: usize },
    #[error("eigenvalue iteration did not converge after {iterations} steps (best estimate {best}, residual {residual})")]
    EigenNotConverged {
        iterations: usize,
        best: f64,
        residual: f64,
    },
    #[error("iteration did not converge after {iterations} steps (last measure {last})")]
    NotConverged { iterations: usize, last: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("unsupported basis combination: {0}")]
    UnsupportedBasis(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coefficient is not strongly monotone (estimated lower bound {m_hat})")]
    NotMonotone { m_hat: f64 },
    #[error("test space does not contain the trial space")]
    NotNested,
    #[error("quantity undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
