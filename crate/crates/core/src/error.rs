use std::path::PathBuf;

use thiserror::Error;

use crate::solver::TraceRecord;

pub type Result<T, E = GhwpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GhwpError {
    /// Bad arguments: dimension mismatch, non-finite coordinates, infeasible
    /// candidates, out-of-range indices.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The problem is well formed but violates a structural requirement
    /// (nondegeneracy, chain length, weight vector lengths).
    #[error("structural error in `{field}`: {message}")]
    Structural { field: String, message: String },

    /// A non-finite objective was produced while iterating.
    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical {
        iteration: usize,
        message: String,
        trace: Vec<TraceRecord>,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("rendering requires a 2-D problem, got dimension {0}")]
    UnsupportedDimension(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GhwpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GhwpError::InvalidInput(msg.into())
    }

    pub(crate) fn structural(field: impl Into<String>, message: impl Into<String>) -> Self {
        GhwpError::Structural {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GhwpError::Io {
            path: path.into(),
            source,
        }
    }
}
