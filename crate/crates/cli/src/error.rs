use tmlp_core::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration file, flag or argument. Exit code 1.
    #[error("configuration error: {0}")]
    Config(String),
    /// Numerical failure or mismatched inputs during a run. Exit code 2.
    #[error("runtime error: {0}")]
    Runtime(String),
    /// A file could not be read, written or decoded. Exit code 3.
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidConfig(_) | Error::LevelOutOfRange { .. } => CliError::Config(msg),
            Error::Io { .. } | Error::Format(_) | Error::Integrity(_) | Error::Underflow => {
                CliError::Io(msg)
            }
            _ => CliError::Runtime(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
