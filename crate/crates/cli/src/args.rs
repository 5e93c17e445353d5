use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "prophet", version, about = "Window-threshold prophet inequality solver and certifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal values and breakpoints for a range of k.
    Bounds(BoundsArgs),
    /// Monte Carlo ratio of a schedule against the prophet.
    Simulate(SimulateArgs),
    /// Run one of the invariant suites.
    Verify(VerifyArgs),
    /// Print a discretised LP in CPLEX LP format.
    LpDump(LpDumpArgs),
}

/// A set of `k` values: `3`, `1..10` (inclusive), `1..=10` or `6,8,10`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KSet(pub Vec<usize>);

impl FromStr for KSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad k value {t:?}"));
        let ks = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty range {s:?}"));
            }
            (a..=b).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if ks.contains(&0) {
            return Err("k must be at least 1".into());
        }
        Ok(KSet(ks))
    }
}

impl std::fmt::Display for KSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Infinite,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    /// Rounded, aligned columns for reading.
    Table,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value = "1..10")]
    pub k: KSet,
    #[arg(long, value_enum, default_value_t = Model::Infinite)]
    pub model: Model,
    /// Horizon for the finite model.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Replace the k = 2 row by the best split over theta = i/r.
    #[arg(long)]
    pub theta_sweep: Option<usize>,
    /// Bisection tolerance on v.
    #[arg(long, default_value_t = 1e-10)]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleChoice {
    /// k = 1: quantile 1/n; k = 2: exact two-threshold; otherwise infinite-model density.
    Auto,
    SampleDensity,
    DeterministicMidpoint,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    /// `uniform01`, `exponential:RATE` or `bounded-pareto:SHAPE,CAP`.
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, env = "PROPHET_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ScheduleChoice::Auto)]
    pub schedule_mode: ScheduleChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Duality,
    Sandwich,
    Lp,
    TwoThreshold,
    BetaBar,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Horizon for the duality suite.
    #[arg(long)]
    pub n: Option<usize>,
    /// Window counts for the duality and sandwich suites.
    #[arg(long)]
    pub k: Option<KSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Program {
    D,
    P,
}

#[derive(Debug, Args)]
pub struct LpDumpArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = Program::D)]
    pub program: Program,
}
