//! Crate error type.
//!
//! Solver non-convergence is deliberately not an error: the fit engine always
//! returns a report whose status the caller inspects. Errors are reserved for
//! inputs that violate a documented precondition.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A container or parameter set violated a structural invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Too few, or too degenerate, data points for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The ODE integrator failed to reach the requested accuracy.
    #[error("integration failure: {0}")]
    Integration(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}
