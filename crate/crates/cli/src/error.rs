//! CLI failures mapped onto the documented exit codes: 1 for validation
//! errors, 2 for runtime failures. A failed check suite exits 3 but is not
//! an error; `validate` reports it through its return value.

use std::fmt;
use std::process::ExitCode;

use upin_core::EngineError;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Runtime(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invalid(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match &e {
            // The wrapped message already names the offending field.
            EngineError::InvalidArgument(_) => CliError::Invalid(e.message().to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
