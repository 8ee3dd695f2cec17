use std::fmt;
use std::io;

/// Failure of a command, grouped by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments; exit 1.
    Usage(String),
    /// A file or socket could not be read or written; exit 2.
    Io(String),
    /// Inputs were readable but rejected; exit 3.
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Validation(_) => 3,
        }
    }

    pub(crate) fn io(context: impl fmt::Display, e: io::Error) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Validation(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<etea_core::Error> for CliError {
    fn from(e: etea_core::Error) -> Self {
        match e {
            etea_core::Error::Io(e) => CliError::Io(e.to_string()),
            etea_core::Error::Csv(e) if e.is_io_error() => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
