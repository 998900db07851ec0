use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] colgrove_core::Error),
    #[error("{}: {source}", path.display())]
    At {
        path: PathBuf,
        source: colgrove_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Dataset layout problem: missing or extra files, disagreeing counts.
    #[error("{}: {message}", path.display())]
    Structure { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("report output: {0}")]
    Report(String),
}

impl Error {
    pub fn structure(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Structure {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) | Error::At { source: e, .. } if e.is_corruption() => 2,
            Error::Structure { .. } => 2,
            Error::Invariant(_) => 3,
            _ => 1,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Report(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Report(e.to_string())
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: &Path) -> Result<T>;
}

impl<T> IoContext<T> for std::result::Result<T, std::io::Error> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl<T> IoContext<T> for std::result::Result<T, colgrove_core::Error> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|source| Error::At {
            path: path.to_path_buf(),
            source,
        })
    }
}
