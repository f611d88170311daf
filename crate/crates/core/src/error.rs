use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive definite (min eigenvalue {min_eig:e}, max |eigenvalue| {max_abs:e})")]
    NotPositiveDefinite { min_eig: f64, max_abs: f64 },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("channel cannot be aligned: {0}")]
    NotAlignable(String),

    #[error("infeasible covariance: {0}")]
    InfeasibleCovariance(String),

    #[error("degenerate power constraint: {0}")]
    DegenerateConstraint(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("common-rate target {target} exceeds the ceiling {ceiling}")]
    InfeasibleTarget { target: f64, ceiling: f64 },

    #[error("grid oracle supports t <= 2, got t = {0}")]
    UnsupportedDim(usize),

    #[error("grid resolution must be at least 2, got {0}")]
    InvalidResolution(usize),

    #[error("no KKT certificate: stationarity residual {residual:e} exceeds {limit:e}")]
    NoCertificate { residual: f64, limit: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("at r0 index {r0_index}, theta index {theta_index}: {source}")]
    Trace {
        r0_index: usize,
        theta_index: usize,
        source: Box<Error>,
    },
}
