use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config {path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("cached result in {dir} is corrupt: {reason}")]
    CacheCorrupt { dir: String, reason: String },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Numerical(#[from] fracspec::Error),

    #[error("acceptance check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigParse { .. } | CliError::ConfigInvalid(_) => 1,
            CliError::CheckFailed(_) => 3,
            _ => 2,
        }
    }
}
