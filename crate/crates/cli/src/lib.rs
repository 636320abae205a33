//! Command-line front end: config loading, run orchestration and export of
//! results, traces and manifests.

pub mod commands;
pub mod config;
pub mod output;

use std::io;
use std::path::Path;

use ltl_explain::search::SearchError;

pub use commands::{cmd_enumerate, cmd_eval, cmd_oracle, cmd_search, cmd_trace_dot, Workspace};
pub use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("refused: {0}")]
    Refused(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// 2 config/IO, 3 refused, 4 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Refused(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::OracleTooLarge { .. } => CliError::Refused(format!("{e}; pass --force to run anyway")),
            SearchError::InvalidParams(_) | SearchError::Formula(_) => CliError::Config(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}
