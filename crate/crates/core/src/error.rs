use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure ({field}): {detail}")]
    InvalidMeasure { field: &'static str, detail: String },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("value {value:e} underflows; recompute the column with a twist (log domain)")]
    Underflow { value: f64 },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
