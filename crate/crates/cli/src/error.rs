use std::io;
use std::path::{Path, PathBuf};

use regchain_core::{AnalyzerError, GameError, LicenseError, NotarizationError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error(transparent)]
    License(#[from] LicenseError),
    #[error(transparent)]
    Notarization(#[from] NotarizationError),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Analyzer(AnalyzerError::Game(GameError::InvalidConfig(_))) => 2,
            _ => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Analyzer(e.into())
    }
}
