use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config entries or problem specifications.
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Solver(#[from] ipg_core::Error),
    /// A run finished but a bound or a rate check failed.
    #[error("violation: {0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Solver(ipg_core::Error::InvalidParameter(_) | ipg_core::Error::Import(_)) => 2,
            CliError::Solver(_) | CliError::Violation(_) => 1,
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type Result<T> = std::result::Result<T, CliError>;
