use std::path::PathBuf;

use pwarx_core::error::PwarxError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: line {line}: {message}", path.display())]
    MalformedCsv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: line {line}: time index {found} breaks the sequence (expected {expected})", path.display())]
    NonContiguousTime {
        path: PathBuf,
        line: u64,
        expected: i64,
        found: i64,
    },

    #[error("{}: line {line}: {message}", path.display())]
    ModelFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] PwarxError),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::MalformedCsv { .. } | CliError::NonContiguousTime { .. } => 3,
            CliError::ModelFormat { .. } => 4,
            CliError::Io { .. } => 5,
            CliError::Core(_) => 6,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
