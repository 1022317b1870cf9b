use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration, or an output
    /// location that cannot be written.
    #[error("config error: {0}")]
    Config(String),
    /// A solver or model routine failed on valid input.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Wraps a core error with the step that produced it.
pub(crate) fn numerical(context: impl std::fmt::Display) -> impl FnOnce(sparsebayes::Error) -> CliError {
    move |e| CliError::Numerical(format!("{context}: {e}"))
}
