use std::path::PathBuf;

use thiserror::Error;

use crate::sql::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot serialize value: {0}")]
    Serialization(String),
    #[error("formula error: {0}")]
    Formula(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("sql error: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{path}:{line}: {message}")]
    Dataset {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("script error at line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("task graph error: {0}")]
    Graph(String),
    #[error("build error: {0}")]
    Build(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
