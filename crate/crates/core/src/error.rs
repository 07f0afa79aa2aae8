use thiserror::Error;

/// Errors produced by the simulation and exact-analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("state space has {states} states, exceeding the cap of {cap}")]
    CapExceeded { states: u128, cap: usize },

    #[error("step limit of {limit} reached before {what}")]
    Timeout { limit: u64, what: &'static str },

    #[error("stationary solver did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for resource-limit failures (state cap, step limit) as opposed to
    /// bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::CapExceeded { .. } | Error::Timeout { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
