use std::path::PathBuf;

use twopoint_core::Error as CoreError;

/// Failures surfaced by the command line, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub const EXIT_USAGE: i32 = 2;
    pub const EXIT_DATA: i32 = 3;
    pub const EXIT_NUMERICAL: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => Self::EXIT_USAGE,
            CliError::Data(_) | CliError::Io { .. } => Self::EXIT_DATA,
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidWindows(_) | CoreError::InvalidParameter(_) => CliError::Usage(msg),
            CoreError::EmptyInput(_) | CoreError::InsufficientData { .. } | CoreError::OutsideObservableZone(_) => {
                CliError::Data(msg)
            }
            CoreError::DegenerateZone { .. }
            | CoreError::NonFinite(_)
            | CoreError::NotPositiveDefinite
            | CoreError::InsufficientReplicates { .. }
            | CoreError::RunawayRejection { .. } => CliError::Numerical(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
