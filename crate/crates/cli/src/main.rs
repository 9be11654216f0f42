mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use crate::config::{validate_and_echo, Cli};
use crate::error::CliError;

fn execute(cli: Cli) -> Result<(), CliError> {
    let (config, dry_run) = validate_and_echo(cli.command)?;
    if dry_run {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(());
    }
    let report = commands::run(&config)?;
    output::write_sidecar(&config, &report.files)?;
    println!(
        "{}: {} -> {}",
        config.job.name(),
        report.summary,
        config.output.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "usage", "message": first}));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
