use std::path::{Path, PathBuf};

use thiserror::Error;

/// Everything that can go wrong in the file formats and the CLI. Each
/// variant maps to one process exit status.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Model(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, msg: impl std::fmt::Display) -> Self {
        Self::Format { path: path.to_path_buf(), msg: msg.to_string() }
    }

    pub fn model(msg: impl std::fmt::Display) -> Self {
        Self::Model(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => exit::USAGE,
            Error::Io { .. } => exit::IO,
            Error::NotConverged(_) => exit::NOT_CONVERGED,
            Error::Format { .. } | Error::Model(_) => exit::DATA,
        }
    }
}

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const NOT_CONVERGED: u8 = 4;
    pub const DATA: u8 = 5;
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
