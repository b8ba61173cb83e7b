use std::path::Path;

use thiserror::Error;

/// Failures surfaced by the command-line front end. Input problems (bad
/// files, malformed JSON, inconsistent sequences) exit with 2; failures
/// while computing exit with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub(crate) fn input(path: &Path, what: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {what}", path.display()))
    }

    pub(crate) fn write(path: &Path, what: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("cannot write {}: {what}", path.display()))
    }
}

impl From<cenn::Error> for CliError {
    fn from(e: cenn::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
