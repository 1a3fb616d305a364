use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::config::ConfigError;
use crate::records::RecordError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{}: {}", path.display(), err.line, err.reason)]
    Record { path: PathBuf, err: RecordError },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] omniflow_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::Record { .. } => "BadRecord",
            CliError::Config(e) => e.code(),
            CliError::Engine(e) => e.code(),
            CliError::Usage(_) => "Usage",
        }
    }

    /// 2 for I/O failures, 1 for everything that is the input's fault.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }

    /// Single-line JSON record for stderr.
    pub fn record(&self) -> String {
        json!({
            "error": self.code(),
            "exit": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn record_at(path: &Path, err: RecordError) -> Self {
        CliError::Record {
            path: path.to_path_buf(),
            err,
        }
    }

    pub fn engine(e: impl Into<omniflow_core::Error>) -> Self {
        CliError::Engine(e.into())
    }
}
