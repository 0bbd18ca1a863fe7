use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Schema { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Core(#[from] qmip_core::Error),

    #[error("{0}")]
    Usage(String),

    /// A recomputed value disagrees with a recorded one.
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        use qmip_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Schema { .. } | CliError::Usage(_) => 2,
            CliError::Mismatch(_) => 5,
            CliError::Core(e) => match e {
                E::Precondition(_) => 3,
                E::Budget(_) | E::TooManyQubits { .. } => 4,
                E::Numerical(_) => 5,
                _ => 2,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
