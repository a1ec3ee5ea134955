use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot {action} {}: {source}", path.display())]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },

    /// Anything wrong with the configuration or the command-line values.
    /// `path` names the offending field, e.g. `transition[1]` or `--model`.
    #[error("invalid {path}: {message}")]
    Invalid { path: String, message: String },
}

impl CliError {
    pub fn invalid(path: impl Into<String>, message: impl ToString) -> Self {
        CliError::Invalid {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 1 for I/O failures, 2 for validation failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Invalid { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
