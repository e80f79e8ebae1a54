use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    /// A log file that does not follow the trajectory CSV schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("{0}")]
    Usage(String),

    #[error("numerical failure: {0}")]
    Numerical(#[from] lislam::Error),
}

impl CliError {
    /// Process exit code: 1 for input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}
