use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A config value failed validation; `key` is its path in the file.
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },

    #[error(transparent)]
    Solver(#[from] vwe_core::Error),

    #[error("writing {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config { key: key.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Input { .. } => 2,
            CliError::Solver(_) | CliError::Output { .. } => 1,
        }
    }
}
