use thiserror::Error;

/// Errors produced by the symbolic and numeric layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed ensemble: {0}")]
    MalformedEnsemble(String),

    #[error("resource limit exceeded: {what} requires {needed}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("entanglement is not an integral prime-exponent combination: {0}")]
    NonIntegralEntanglement(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
