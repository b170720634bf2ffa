use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Operands live on different numbers of spins.
    #[error("dimension mismatch: {left} vs {right} spins")]
    Dimension { left: usize, right: usize },

    /// A dense operator or a path enumeration exceeded its configured limit.
    #[error("capacity exceeded: {what} needs {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    /// Input failed a structural or physical check.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An exponent left the range the dense routines handle.
    #[error("range error: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Oracle(#[from] pmrsim_oracles::OracleError),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
