use serde::{Deserialize, Serialize};

use prophet_core::distributions::Distribution;
use prophet_core::policy_sim::{
    schedule_from_infinite, schedule_single_threshold, schedule_two_threshold_exact, simulate, QuantileSchedule,
    ScheduleMode, SimulationReport,
};

use crate::args::{ScheduleChoice, SimulateArgs};
use crate::manifest::RunManifest;
use crate::{CliError, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub report: SimulationReport,
}

pub fn schedule_for(k: usize, n: usize, choice: ScheduleChoice) -> Result<QuantileSchedule, CliError> {
    let s = match choice {
        ScheduleChoice::Auto => match k {
            1 => schedule_single_threshold(n)?,
            2 => schedule_two_threshold_exact(n)?,
            _ => schedule_from_infinite(k, n, ScheduleMode::SampleDensity)?,
        },
        ScheduleChoice::SampleDensity => schedule_from_infinite(k, n, ScheduleMode::SampleDensity)?,
        ScheduleChoice::DeterministicMidpoint => schedule_from_infinite(k, n, ScheduleMode::DeterministicMidpoint)?,
    };
    Ok(s)
}

pub fn compute(args: &SimulateArgs) -> Result<SimulateOutput, CliError> {
    let d: Distribution = args.dist.parse()?;
    if args.k == 0 || args.k > args.n {
        return Err(CliError::Invalid(format!("need 1 <= k <= n, got k={}, n={}", args.k, args.n)));
    }
    let schedule = schedule_for(args.k, args.n, args.schedule_mode)?;
    let report = simulate(&schedule, &d, args.trials, args.seed)?;
    let mode = match args.schedule_mode {
        ScheduleChoice::Auto => "auto",
        ScheduleChoice::SampleDensity => "sample-density",
        ScheduleChoice::DeterministicMidpoint => "deterministic-midpoint",
    };
    let params = [
        ("k", args.k.to_string()),
        ("n", args.n.to_string()),
        ("dist", args.dist.clone()),
        ("trials", args.trials.to_string()),
        ("schedule_mode", mode.to_string()),
    ];
    Ok(SimulateOutput {
        manifest: RunManifest::new("simulate", params, Some(args.seed)),
        report,
    })
}

pub fn run(args: &SimulateArgs) -> Result<(String, Outcome), CliError> {
    let out = compute(args)?;
    let outcome = match out.report.bound_met {
        Some(false) => Outcome::NumericalFailure,
        _ => Outcome::Pass,
    };
    Ok((crate::to_json(&out), outcome))
}
