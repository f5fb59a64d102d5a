use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("metric is not positive definite at node {node}: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { node: usize, min_eigenvalue: f64 },

    #[error("weight must be positive, found {value:e} at node {node}")]
    NonPositiveWeight { node: usize, value: f64 },

    #[error("field values must be finite, found {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Helmholtz shift must be positive for a definite operator, got {0}")]
    IndefiniteShift(f64),

    #[error("pressure equation with R0 = {0} is not invertible: need R0 < 0")]
    NonNegativeR0(f64),

    #[error("discrete maximum principle violated: min p = {min_p:e}")]
    NegativePressure { min_p: f64 },

    #[error("eigen-iteration did not converge in {iterations} iterations (residual {residual:e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("time weight h vanishes or changes sign at t = {time}")]
    WeightSignChange { time: f64 },

    #[error("flow aborted at t = {time}: {source}")]
    FlowAborted { time: f64, source: Box<Error> },

    #[error("solution blew up at t = {time} (max |v| = {max:e})")]
    BlowUp { time: f64, max: f64 },

    #[error("history is missing {0}")]
    MissingData(&'static str),
}

impl Error {
    pub(crate) fn at_time(self, time: f64) -> Error {
        match self {
            already @ Error::FlowAborted { .. } => already,
            other => Error::FlowAborted {
                time,
                source: Box::new(other),
            },
        }
    }
}
