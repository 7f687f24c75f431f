use thiserror::Error;

/// Errors raised by the solver and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("time grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },

    #[error("mode solutions belong to different wavenumbers ({left} vs {right})")]
    ModeMismatch { left: f64, right: f64 },

    #[error("time {t} is not covered by the forcing grid (last node {last})")]
    OutOfRange { t: f64, last: f64 },

    #[error("time step {dt} exceeds the stability limit {limit}")]
    Unstable { dt: f64, limit: f64 },

    #[error("Picard iteration failed to converge after {iterations} iterations (last contraction ratio {last_ratio:.3e})")]
    NoContraction {
        iterations: usize,
        last_ratio: f64,
        ratios: Vec<f64>,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("integrator failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("neglected tail {tail:.3e} exceeds tolerance {tol:.3e}")]
    TailTooLarge { tail: f64, tol: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
