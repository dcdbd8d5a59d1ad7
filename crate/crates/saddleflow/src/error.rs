use std::path::PathBuf;

/// Failure of a CLI command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] saddleflow_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: no rounds")]
    NoRounds { path: PathBuf },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invariant violated: {0}")]
    Violation(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for invariant or bound violations, 2 for usage and configuration
    /// errors, 3 for I/O and file-format errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Violation(_) => 1,
            Self::Config(_) | Self::Core(_) => 2,
            Self::Io { .. } | Self::Format { .. } | Self::NoRounds { .. } | Self::Csv(_) => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
