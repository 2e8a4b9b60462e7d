//! `cavity-search` command-line front end.
//!
//! Exit codes: 0 success, 1 a checked invariant failed, 2 usage or invalid
//! configuration, 3 file I/O.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::config::{resolve, Cli, FileConfig, OUT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot access {}: {reason}", path.display())]
    Io { path: PathBuf, reason: String },

    #[error("{} check(s) failed:\n  {}", .0.len(), .0.join("\n  "))]
    Assertion(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<cavity_search::Error> for CliError {
    fn from(e: cavity_search::Error) -> Self {
        match e {
            cavity_search::Error::StepSize { .. } => CliError::Assertion(vec![e.to_string()]),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version exit 0, usage errors exit 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cavity-search: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env_out = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let config = resolve(cli, &file, env_out)?;
    run::run(&config)
}
