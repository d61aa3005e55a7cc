use std::path::PathBuf;

use crate::forest::BlockId;

/// Errors produced anywhere in the load-balancing stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("block {0} is not a leaf of this forest")]
    NotFound(BlockId),

    #[error("block {id}: {reason}")]
    Refinement { id: BlockId, reason: String },

    #[error("cannot coarsen children of {parent}: {reason}")]
    Coarsening { parent: BlockId, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
