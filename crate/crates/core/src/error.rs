use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = UscoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum UscoError {
    /// A solution violates a structural constraint of its input.
    #[error("infeasible solution: {0}")]
    Infeasible(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The oracle could not produce any feasible solution.
    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("QP did not converge after {iterations} iterations (KKT gap {gap:.3e})")]
    QpNonConvergence { iterations: usize, gap: f64 },

    #[error("oracle failed on training pair {pair}: {source}")]
    Training {
        pair: usize,
        #[source]
        source: Box<UscoError>,
    },

    #[error("format error in field `{field}`: {msg}")]
    Format { field: String, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl UscoError {
    pub(crate) fn format(field: impl Into<String>, msg: impl Into<String>) -> Self {
        UscoError::Format {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        UscoError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(UscoError::Dimension { expected, got })
    }
}
