use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An operation was invoked on a state that is not ready for it.
    #[error("invalid state: {0}")]
    State(String),

    /// An exhaustive search would exceed its configured budget.
    #[error("combinatorial search infeasible: {0}")]
    Infeasible(String),

    /// A computation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}
