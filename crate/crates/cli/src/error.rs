use std::path::PathBuf;

use thiserror::Error;
use tguard_core::GameError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("weights required")]
    MissingWeights,

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("{failed} of {total} trials failed")]
    TrialFailures { failed: usize, total: usize },

    #[error(transparent)]
    Game(#[from] GameError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for a batch with failed trials, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::MissingWeights | CliError::Invalid(_) => 2,
            CliError::Game(GameError::InvalidConfig(_)) => 2,
            CliError::TrialFailures { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
