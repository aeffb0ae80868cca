//! Scenario runner for GP-CBO experiments.
//!
//! A TOML scenario ([`config`]) is resolved into concrete parameters, run for
//! one or more seeds ([`experiment`]), and written out as CSV and JSON
//! ([`output`]). [`plot`] turns those files back into SVG charts.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod experiment;
pub mod output;
pub mod plot;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] gpcbo::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } | CliError::Data { .. } => 4,
        }
    }
}
