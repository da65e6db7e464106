use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("metric is not positive definite at node {node}")]
    NotPositiveDefinite { node: usize },
    #[error("elliptic solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("function does not vanish on the boundary (trace {trace:.3e})")]
    NonzeroTrace { trace: f64 },
    #[error("smoothing length {eps} outside (0, {max}]")]
    EpsOutOfRange { eps: f64, max: f64 },
    #[error("vector field {0} is not tangential")]
    NotTangential(String),
    #[error("time derivative requested but no time jet supplied")]
    MissingTimeJet,
    #[error("background jets available to order {available}, need {needed}")]
    JetOrder { available: usize, needed: usize },
    #[error("implicit stage iteration failed to converge at step {step} (change {change:.3e})")]
    StageDivergence { step: usize, change: f64 },
    #[error("time step {dt} exceeds the explicit stability limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("background data: {0}")]
    Background(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
