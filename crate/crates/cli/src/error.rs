use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ndstc::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 2 config, 3 infeasible budget, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(ndstc::Error::Parameter(_)) => 2,
            CliError::Core(ndstc::Error::Infeasible(_)) => 3,
            CliError::Core(ndstc::Error::Numerical(_)) => 4,
            CliError::Core(ndstc::Error::State(_)) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> ExitCode {
        ExitCode::from(e.exit_code())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
