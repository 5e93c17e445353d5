//! Library side of the `prophet` binary, so tests can drive commands in-process.
//!
//! Exit codes: 0 when every check passes, 2 on a numerical failure, 3 on invalid input.

pub mod args;
pub mod bounds;
pub mod manifest;
pub mod simulate;
pub mod verify;

use serde::Serialize;

use prophet_core::finite_model::WindowPlan;
use prophet_core::lp_oracle::{build_D, build_P, to_lp_string};

use args::{Cli, Command, LpDumpArgs, Program};
use manifest::RunManifest;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_INVALID: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    NumericalFailure,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Pass => EXIT_OK,
            Outcome::NumericalFailure => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] prophet_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn io(e: impl std::fmt::Display) -> Self {
        CliError::Io(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        use prophet_core::Error as E;
        match self {
            CliError::Invalid(_) | CliError::Io(_) => EXIT_INVALID,
            CliError::Core(E::InvalidParameter(_) | E::SizeLimit(_)) => EXIT_INVALID,
            CliError::Core(_) => EXIT_NUMERICAL,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialise");
    s.push('\n');
    s
}

fn lp_dump(args: &LpDumpArgs) -> Result<(String, Outcome), CliError> {
    let plan = WindowPlan::equal(args.n, args.k)?;
    let text = match args.program {
        Program::D => to_lp_string(&build_D::<f64>(args.n, args.k, args.m, &plan)?),
        Program::P => to_lp_string(&build_P::<f64>(args.n, args.k, args.m, &plan)?),
    };
    let manifest = RunManifest::new(
        "lp-dump",
        [
            ("n", args.n.to_string()),
            ("k", args.k.to_string()),
            ("m", args.m.to_string()),
            ("program", format!("{:?}", args.program)),
        ],
        None,
    );
    let header = serde_json::to_string(&manifest).expect("manifest serialises");
    Ok((format!("\\ manifest: {header}\n{text}"), Outcome::Pass))
}

/// Runs a parsed command and returns its output text.
pub fn run(cli: &Cli) -> Result<(String, Outcome), CliError> {
    match &cli.command {
        Command::Bounds(a) => bounds::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Verify(a) => verify::run(a),
        Command::LpDump(a) => lp_dump(a),
    }
}
