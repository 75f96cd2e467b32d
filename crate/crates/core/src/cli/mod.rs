//! Command-line front end.

pub mod commands;
pub mod config;
pub mod datafiles;
pub mod emit;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
pub use config::{parse_config, Config};
pub use emit::Format;

#[derive(Debug, Parser)]
#[command(name = "rfsep", version, about = "RF source separation under interference-type uncertainty")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON config file; missing sections take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the section's base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `csv` writes CSV plus a JSON mirror; `json` writes JSON only.
    #[arg(long, global = true, default_value = "csv")]
    pub format: Format,
    /// Worker threads for Monte Carlo loops.
    #[arg(long, global = true, env = "RFSEP_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic PSK dataset with Gaussian interference.
    Gen,
    /// Fit separators from a generated dataset.
    Learn,
    /// Run the MSE/BER sweep over SINR.
    Sweep,
    /// Run the detection/estimation asymptotics over N.
    Asymptotics,
    /// Compute the type-separability certificate only.
    Tdc,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Learn => "learn",
            Command::Sweep => "sweep",
            Command::Asymptotics => "asymptotics",
            Command::Tdc => "tdc",
        }
    }
}

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Format { .. } => EXIT_FORMAT,
        Error::Numerical(_) | Error::NotPsd(_) | Error::EmCollapse { .. } => EXIT_NUMERICAL,
        _ => EXIT_OTHER,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli) {
        Ok(outputs) => {
            for p in outputs {
                log::info!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
