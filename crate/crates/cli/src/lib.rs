//! Library side of the `hcschema` command-line tool.

pub mod commands;
pub mod config;
pub mod record;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Attack(#[from] hcschema::attacks::AttackError),
    #[error("{0}")]
    Schema(#[from] hcschema::SchemaError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{aborts} rounds aborted on budget, threshold is {limit}")]
    TooManyAborts { aborts: u64, limit: u64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 2,
            CliError::TooManyAborts { .. } => 3,
            CliError::Attack(_) | CliError::Io(_) => 1,
        }
    }
}
