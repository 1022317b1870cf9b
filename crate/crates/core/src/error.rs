use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The system to be factorized is numerically singular.
    #[error("ill-conditioned system (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("pruning removed every column of the dictionary")]
    EmptyModel,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
