use std::path::PathBuf;
use std::process::ExitCode;

/// Failures of a command, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for usage and configuration errors, 2 for bad input data, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ppd_core::Error> for CliError {
    fn from(e: ppd_core::Error) -> Self {
        use ppd_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidConfig(_) => CliError::Config(msg),
            E::GridTooSmall { .. }
            | E::LengthMismatch { .. }
            | E::NonFinite { .. }
            | E::GridMismatch { .. }
            | E::InvalidWarping(_)
            | E::EmptyFunctionSet
            | E::TooFewFunctions { .. } => CliError::Data(msg),
            E::InfeasibleTemplate(_)
            | E::InfeasibleHeights { .. }
            | E::TooManyFailedReplicates { .. }
            | E::Numerical(_) => CliError::Numerical(msg),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
