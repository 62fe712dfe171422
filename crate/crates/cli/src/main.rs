mod args;
mod commands;
mod config;
mod error;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use densityeq::{exec, ExecMode};
use error::CliError;

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let argv = config::expand(argv, &Cli::command())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            return Err(CliError::Usage(text.trim_start_matches("error: ").trim_end().to_string()));
        }
    };
    let mode = if cli.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    exec::with_jobs(cli.jobs, || match &cli.command {
        Command::Eq(a) => commands::eq(a, mode),
        Command::Sweep(a) => commands::sweep(a, mode),
        Command::Thicken(a) => commands::thicken(a, mode),
        Command::Simulate(a) => commands::simulate(a, mode),
        Command::Flows(a) => commands::flows(a),
        Command::Regress(a) => commands::regress(a, mode),
        Command::SynthTrips(a) => commands::synth_trips(a),
        Command::SynthPanel(a) => commands::synth_panel(a),
    })
}

fn main() {
    if let Err(e) = run(std::env::args_os().collect()) {
        eprintln!("densityeq: {e}");
        std::process::exit(e.exit_code());
    }
}
