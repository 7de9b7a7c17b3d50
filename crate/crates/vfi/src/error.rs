use std::path::{Path, PathBuf};

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: config hash {found} does not match the current configuration ({expected}); re-run `vfi simulate`")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("metrics files come from different configurations: {0} and {1}")]
    MixedRuns(String, String),

    #[error(transparent)]
    Core(#[from] vfi_core::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn parse(path: impl AsRef<Path>, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.as_ref().to_path_buf(),
            message: message.to_string(),
        }
    }

    /// 2 for bad input or configuration, 3 for I/O, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e.root() {
                vfi_core::Error::Validation { .. } => 2,
                _ => 4,
            },
            _ => 2,
        }
    }
}
