//! Command-line front end: configuration, subcommands and CSV/SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use clap::Parser;
use std::ffi::OsString;
use std::path::PathBuf;
use survival_core::Error;

pub use commands::{run, Command, Context};
pub use config::RunConfig;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "SURVIVAL_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 2 for numerical non-convergence, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "survival", version, about = "Survival probability of an add-atom excitation on a lattice")]
pub struct Cli {
    /// Configuration file (`key = value` lines with `[section]` headers).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the `output` key).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress and summaries.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

pub fn load_config(path: Option<&std::path::Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            RunConfig::parse(&text)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}: expected a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))
}

/// Parse arguments, run the subcommand and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|_| {
        let config = load_config(cli.config.as_deref())?;
        let out = commands::default_out(&config, cli.out.as_deref());
        let ctx = Context { config, out, quiet: cli.quiet };
        run(cli.command, &ctx)
    });
    match result {
        Ok(summary) => {
            if !cli.quiet {
                print!("{summary}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
