//! Pipelines behind the `qbounce` executable: configuration, presets,
//! the runs themselves, and CSV/JSON/SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod pipeline;
pub mod plot;
pub mod presets;

use std::fmt;

pub use config::{Mode, RunConfig};

/// Errors are split by exit code: 1 for anything the user can fix in the
/// configuration or on the command line, 2 for numerical failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(std::io::Error),
    Numerical(qbounce::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "configuration error: {msg}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qbounce::Error> for CliError {
    fn from(e: qbounce::Error) -> Self {
        match e {
            qbounce::Error::InvalidArgument(msg) => Self::Config(msg),
            e @ qbounce::Error::IndexOutOfRange { .. } => Self::Config(e.to_string()),
            e => Self::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Config(format!("csv: {e}"))
    }
}
