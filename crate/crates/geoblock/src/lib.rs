//! Command-line front end for `geoblock-core`: loads a metric-profile file,
//! runs one library operation and writes JSON reports, CSV plot data and a
//! summary table.

pub mod cli;
pub mod format;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse profile {path}: {message}")]
    Parse { path: String, message: String },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Domain(#[from] geoblock_core::Error),
}

impl CliError {
    /// 1 for failures inside the computation, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } => "read",
            CliError::Parse { .. } => "parse",
            CliError::Write { .. } => "write",
            CliError::Input(_) => "input",
            CliError::Domain(_) => "domain",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wire<'a> {
            error: &'a str,
            exit_code: u8,
            message: String,
        }
        serde_json::to_string(&Wire { error: self.kind(), exit_code: self.exit_code(), message: self.to_string() }).expect("errors serialize")
    }
}
