use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at `{path}` (line {line}): {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: missing constant `{0}`")]
    MissingConstant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("truncation failure at level {level}: kernel puts no mass on the level box at state {state:?}, action {action}")]
    TruncationFailure { level: usize, state: Vec<f64>, action: f64 },

    #[error("no parameter on the grid has finite divergence")]
    NoDominatingParameter,

    #[error("value iteration is not contracting (sup-change grew for {0} consecutive sweeps)")]
    ContractionFailure(usize),

    #[error("stationary distribution did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("observed transition has zero likelihood under every parameter in the belief support")]
    ImpossibleObservation,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
