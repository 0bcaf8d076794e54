use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("tolerance {target:.3e} not reached: best value {best} with error estimate {estimate:.3e}")]
    Precision { best: f64, estimate: f64, target: f64 },

    #[error("near-degenerate spectrum: gap {gap:.3e} below threshold {threshold:.3e}")]
    Degenerate { gap: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
