use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] ddsynth_core::Error),
}

impl CliError {
    pub const EXIT_IO: u8 = 1;
    pub const EXIT_CONFIG: u8 = 2;
    pub const EXIT_NUMERICAL: u8 = 3;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Csv { .. } => Self::EXIT_IO,
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
