use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use prophet_cli::args::Cli;
use prophet_cli::{run, CliError, EXIT_INVALID, EXIT_OK};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::from(EXIT_OK),
                _ => ExitCode::from(EXIT_INVALID),
            };
        }
    };
    let result = run(&cli).and_then(|(body, outcome)| {
        match &cli.out {
            Some(path) => std::fs::write(path, &body).map_err(CliError::io)?,
            None => std::io::stdout().write_all(body.as_bytes()).map_err(CliError::io)?,
        }
        Ok(outcome)
    });
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
