//! Invariant suites behind `prophet verify`.

use serde::{Deserialize, Serialize};

use prophet_core::asymptotics::{beta_bar, verify_sandwich, I};
use prophet_core::finite_model::{dual_certificate, gamma_n_1, solve_v_finite, two_threshold_exact, WindowPlan};
use prophet_core::lp_oracle::{build_D, solve, solve_D, solve_P, DEFAULT_ITERATION_LIMIT};
use prophet_core::Error;

use crate::args::{Suite, VerifyArgs};
use crate::manifest::RunManifest;
use crate::{CliError, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    /// Distance to failing; negative when the check fails.
    pub margin: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, target: Option<f64>, tolerance: Option<f64>, margin: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target,
            tolerance,
            margin,
            passed: margin >= 0.0,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self::new(name, value, Some(target), Some(tol), tol - (value - target).abs())
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Some(limit), None, limit - value)
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Some(limit), None, value - limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub skipped: Vec<Skipped>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<Check>, skipped: Vec<Skipped>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            suite: suite.into(),
            checks,
            skipped,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub report: SuiteReport,
}

pub fn beta_bar_suite() -> Result<SuiteReport, CliError> {
    let b = beta_bar(1e-12f64)?;
    let mut checks = vec![
        Check::within("beta_bar", b.beta, 1.341, 1e-3),
        Check::within("gamma_bar", b.gamma, 0.745, 1e-3),
        Check::within("I(beta_bar)", I(b.beta)?, 1.0, 1e-9),
    ];
    let grid: Vec<f64> = (0..20).map(|i| 1.05 + 0.05 * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&x| I(x)).collect::<Result<_, _>>()?;
    let drop = values.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("I decreasing on 20-point grid (smallest drop)", drop, 0.0));
    Ok(SuiteReport::new("beta-bar", checks, Vec::new()))
}

pub fn two_threshold_suite() -> Result<SuiteReport, CliError> {
    let c = two_threshold_exact::<f64>()?;
    let tol = 1e-4;
    let checks = vec![
        Check::within("u2", c.u2, 1.316097, tol),
        Check::within("theta", c.theta, 0.603285, tol),
        Check::within("a1", c.a1, 0.517708, tol),
        Check::within("a2", c.a2, 2.316097, tol),
        Check::within("v_bar", c.v_bar, 0.70804, tol),
        Check::within("dual a", c.dual.a, 0.516213, tol),
        Check::within("dual b", c.dual.b, 0.567355, tol),
        Check::within("dual c", c.dual.c, 0.255744, tol),
        Check::within("d1 - v_bar", c.dual.d1 - c.v_bar, 0.0, tol),
    ];
    Ok(SuiteReport::new("two-threshold", checks, Vec::new()))
}

pub fn duality_suite(cases: &[(usize, usize)]) -> Result<SuiteReport, CliError> {
    let mut checks = Vec::new();
    for &(n, k) in cases {
        let plan = WindowPlan::equal(n, k)?;
        let s = solve_v_finite(&plan, 1e-12f64)?;
        let c = dual_certificate(&s)?;
        let tag = format!("n={n} k={k}");
        checks.push(Check::within(format!("{tag}: d1 - a1"), c.d[0] - c.a[0], 0.0, 1e-6));
        checks.push(Check::within(format!("{tag}: a1 - v*"), c.a[0] - c.v, 0.0, 1e-6));
        let step = c.a.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least(format!("{tag}: a nonincreasing (smallest step)"), step, 0.0));
        let gap = c.continuity_gaps().into_iter().fold(0.0, f64::max);
        checks.push(Check::at_most(format!("{tag}: F continuity gap"), gap, 1e-7));
    }
    Ok(SuiteReport::new("duality", checks, Vec::new()))
}

const SANDWICH_SLACK: f64 = 1e-9;

pub fn sandwich_suite(ks: &[usize]) -> Result<SuiteReport, CliError> {
    let mut checks = Vec::new();
    for &k in ks {
        let r = verify_sandwich::<f64>(k)?;
        let row_margin = r
            .rows
            .iter()
            .flat_map(|row| [row.above_x, row.below_band, row.below_z])
            .fold(f64::INFINITY, f64::min);
        let tail_margin = r.tail_margins.iter().copied().fold(f64::INFINITY, f64::min);
        // Breakpoints carry bisection error, so the limit allows the same slack as the core check.
        checks.push(Check::at_least(format!("k={k}: x <= y <= min(z, x + band)"), row_margin, -SANDWICH_SLACK));
        checks.push(Check::at_least(format!("k={k}: y_(k-l) >= l/(32k)"), tail_margin, -SANDWICH_SLACK));
        debug_assert_eq!(r.passed(), row_margin >= -SANDWICH_SLACK && tail_margin >= -SANDWICH_SLACK);
    }
    Ok(SuiteReport::new("sandwich", checks, Vec::new()))
}

/// Strong-duality instances for the LP suite.
pub const LP_DUALITY_CASES: [(usize, usize, usize); 6] =
    [(1, 1, 10), (2, 1, 50), (2, 2, 40), (3, 1, 60), (4, 2, 40), (6, 3, 30)];

pub fn lp_suite() -> Result<SuiteReport, CliError> {
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for (n, k, m) in LP_DUALITY_CASES {
        let d = solve_D::<f64>(n, k, m)?;
        let p = solve_P::<f64>(n, k, m)?;
        let tag = format!("n={n} k={k} m={m}");
        checks.push(Check::within(format!("{tag}: D - P"), d.objective - p.objective, 0.0, 1e-6));
        let kkt = d.kkt.map_or(f64::INFINITY, |r| r.max()).max(p.kkt.map_or(f64::INFINITY, |r| r.max()));
        checks.push(Check::at_most(format!("{tag}: KKT residual"), kkt, 1e-7));
    }
    checks.push(Check::within("D(1,1,10)", solve_D::<f64>(1, 1, 10)?.objective, 1.0, 1e-7));
    let trend: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&m| solve_D::<f64>(2, 1, m).map(|r| r.objective))
        .collect::<Result<_, _>>()?;
    checks.push(Check::within("D(2,1,400)", trend[3], 0.75, 0.02));
    let errs: Vec<f64> = trend.iter().map(|v| (v - 0.75).abs()).collect();
    let worst_rise = errs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most("|D(2,1,m) - 0.75| nonincreasing in m (largest rise)", worst_rise, 1e-3));
    let p3 = solve_P::<f64>(3, 1, 200)?.objective;
    let d3 = solve_D::<f64>(3, 1, 200)?.objective;
    checks.push(Check::at_most("P(3,1,200) - D(3,1,200)", p3 - d3, 1e-6));
    let one = solve_D::<f64>(2, 1, 100)?.objective;
    let two = solve_D::<f64>(2, 2, 100)?.objective;
    checks.push(Check::at_least("D(2,2,100) - D(2,1,100)", two - one, -1e-6));
    for n in [2, 3, 4] {
        let v = solve_D::<f64>(n, 1, 400)?.objective;
        checks.push(Check::within(format!("D({n},1,400) vs gamma_n_1"), v, gamma_n_1(n)?, 0.02));
    }
    // The discretisation bound is only informative for m >= max(n^3, 4 (12n)^2);
    // this is the one configuration it is tried at.
    let (n, m) = (10usize, 4 * 20_736usize);
    let plan = WindowPlan::equal(n, 1)?;
    match build_D::<f64>(n, 1, m, &plan) {
        Err(Error::SizeLimit(reason)) => skipped.push(Skipped {
            name: format!("discretisation bound at n={n} m={m}"),
            reason,
        }),
        Err(e) => return Err(e.into()),
        Ok(lp) => {
            let r = solve(&lp, DEFAULT_ITERATION_LIMIT);
            let bound = (1.0 - 12.0 * n as f64 / (m as f64).sqrt()) * gamma_n_1::<f64>(n)?;
            checks.push(Check::at_least(format!("D({n},1,{m}) discretisation bound"), r.objective, bound));
        }
    }
    Ok(SuiteReport::new("lp", checks, skipped))
}

/// The three finite-model configurations certified by default.
pub const DUALITY_CASES: [(usize, usize); 3] = [(100, 2), (100, 4), (1000, 3)];
pub const SANDWICH_KS: [usize; 4] = [6, 8, 10, 20];

pub fn run_suite(args: &VerifyArgs) -> Result<SuiteReport, CliError> {
    match args.suite {
        Suite::BetaBar => beta_bar_suite(),
        Suite::TwoThreshold => two_threshold_suite(),
        Suite::Lp => lp_suite(),
        Suite::Sandwich => {
            let ks = args.k.as_ref().map_or(SANDWICH_KS.to_vec(), |k| k.0.clone());
            sandwich_suite(&ks)
        }
        Suite::Duality => {
            let cases: Vec<(usize, usize)> = match (args.n, &args.k) {
                (None, None) => DUALITY_CASES.to_vec(),
                (Some(n), Some(ks)) => ks.0.iter().map(|&k| (n, k)).collect(),
                _ => return Err(CliError::Invalid("duality needs both --n and --k, or neither".into())),
            };
            duality_suite(&cases)
        }
    }
}

pub fn run(args: &VerifyArgs) -> Result<(String, Outcome), CliError> {
    let report = run_suite(args)?;
    let mut params = vec![("suite", report.suite.clone())];
    if let Some(n) = args.n {
        params.push(("n", n.to_string()));
    }
    if let Some(k) = &args.k {
        params.push(("k", k.to_string()));
    }
    let outcome = if report.passed { Outcome::Pass } else { Outcome::NumericalFailure };
    let out = VerifyOutput {
        manifest: RunManifest::new("verify", params, None),
        report,
    };
    Ok((crate::to_json(&out), outcome))
}
