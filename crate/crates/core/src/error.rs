use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    /// A request would exceed the configured memory budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// Interval endpoints could not be separated at the working precision.
    #[error("precision error: {0}; raise precision_bits")]
    Precision(String),

    #[error("pole at s = 1")]
    Pole,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("cache error: {0}")]
    Cache(String),

    /// Two independent computations that must agree did not.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
