mod args;
mod commands;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::{resolve, UsageError};

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Fetch => commands::fetch(&resolve(common, None, None, false)?),
        Command::Summarize(o) => commands::summarize(&resolve(common, None, None, false)?, o.text),
        Command::Did(o) => commands::did(&resolve(common, None, None, false)?, o.text),
        Command::EventStudy { output, event } => {
            commands::event_study(&resolve(common, Some(event), None, false)?, output.text)
        }
        Command::Synth { output, svg } => {
            commands::synth(&resolve(common, None, None, *svg)?, output.text)
        }
        Command::UnitRoot { output, llc } => {
            commands::unit_root(&resolve(common, None, Some(llc), false)?, output.text)
        }
        Command::ReproduceAll { event, llc, svg } => {
            commands::reproduce_all(&resolve(common, Some(event), Some(llc), *svg)?)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors from clap exit with status 2 inside `parse`.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            eprintln!("Run `oilpanel --help` for usage.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
