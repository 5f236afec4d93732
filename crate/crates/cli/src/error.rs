use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config or override; nothing was computed.
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Wraps any library error as a numerical failure.
pub(crate) fn num<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}
