use std::fmt;

use assess_store::StoreError;

/// Exit status contract: 0 success, 1 scoring or domain error, 2 usage or
/// environment error.
#[derive(Debug)]
pub enum CliError {
    Domain(String),
    Env(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Env(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) | CliError::Env(m) => f.write_str(m),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownUser(_)
            | StoreError::UnknownTrial(_)
            | StoreError::UnknownMeasure(_)
            | StoreError::Duplicate(_)
            | StoreError::Rejected(_) => CliError::Domain(e.to_string()),
            StoreError::Sql(_) | StoreError::Corrupt(_) | StoreError::SchemaVersion(_) | StoreError::Csv(_) => {
                CliError::Env(e.to_string())
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
