use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimension {0} outside supported range 2..=8")]
    Dimension(usize),

    #[error("matrix of dimension {n} needs {expected} entries, got {got}")]
    EntryCount { n: usize, expected: usize, got: usize },

    #[error("principal minor order {order} out of range 1..={n}")]
    MinorOrder { order: usize, n: usize },

    #[error("polynomial degree {got} not supported here (expected {expected})")]
    Degree { got: usize, expected: &'static str },

    #[error("zero pivot in Routh array row {row}")]
    ZeroPivot { row: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Newton refinement failed after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("integrator step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
