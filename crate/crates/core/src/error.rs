use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval: lower bound {a} exceeds upper bound {b}")]
    InvalidInterval { a: f64, b: f64 },

    #[error("uniform variate {0} outside [0, 1)")]
    InvalidVariate(f64),

    #[error("{value} lies outside the offer support [{low}, {high}]")]
    Domain { value: f64, low: f64, high: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("policy never accepts at state 0; expected {0} diverges")]
    Divergence(&'static str),

    #[error("infeasible calibration: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}
