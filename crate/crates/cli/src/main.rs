mod args;
mod commands;
mod error;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, RunConfig};
use crate::error::{CliError, CliResult};

/// Caps the rayon pool at `MAXPROC_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("MAXPROC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("MAXPROC_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let cfg = RunConfig::resolve(cli.opts)?;
    let done = commands::run(&cli.command, &cfg)?;
    done.outputs.commit()?;
    match done.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
