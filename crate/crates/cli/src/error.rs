use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration or arguments; nothing was written.
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Domain(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<pathlab::Error> for CliError {
    fn from(e: pathlab::Error) -> Self {
        match e {
            pathlab::Error::Domain(_) | pathlab::Error::Range(_) => CliError::Domain(e.to_string()),
            pathlab::Error::Argument(_) | pathlab::Error::ContextMismatch(..) => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
