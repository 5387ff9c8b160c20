use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration (exit 1).
    #[error("configuration error: {0}")]
    Config(String),

    /// One or more self-check suites failed (exit 2).
    #[error("self-check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Core(#[from] mec_core::Error),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(what: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{what}: {e}"))
    }
}
