use std::process::ExitCode;

use ruelle_core::Error;

#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Numeric(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Numeric(_) => ExitCode::from(2),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e:#}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e:#}"),
        }
    }
}

/// Bad arguments are configuration errors; everything else the core can
/// report is a numerical failure.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => CliError::Config(e.into()),
            _ => CliError::Numeric(e.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(anyhow::Error::new(e).context("cannot write output"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(anyhow::Error::new(e).context("cannot write CSV output"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(anyhow::Error::new(e).context("cannot write JSON output"))
    }
}
