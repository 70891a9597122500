use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("{}unknown label {label:?} (expected one of: happy, angry, disgust, sad, like, neutral)", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    UnknownLabel { line: Option<usize>, label: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("{}:{line}: {reason}", path.display())]
    ModelFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::ModelFormat {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line tool: 1 usage, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid { .. } => 1,
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}
