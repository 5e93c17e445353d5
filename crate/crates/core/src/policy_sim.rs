//! Window-threshold policies and their Monte Carlo evaluation.
//!
//! A policy draws one quantile `q_t` per window, turns it into the threshold
//! `x_t` with `P(X >= x_t) = q_t`, and accepts the first arrival of window `t`
//! that reaches `x_t`.
//!
//! Schedules derived from the infinite model sample `q_t` from the law whose
//! image under `y = exp(-(n-1) q)` has density proportional to
//! `-log y / (1 - y^(1/k))` on `(y_t, y_{t-1})`. That law is tabulated in
//! `s = y^(1/k)` and inverted by linear interpolation. Values of `y` below
//! `exp(-(n-1))` would need `q > 1` and are placed at `q = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{prophet_value_exact, prophet_value_monte_carlo, Descriptor, Distribution};
use crate::error::{Error, Result};
use crate::finite_model::{gamma_n_1, two_threshold_exact, WindowPlan};
use crate::infinite_model::solve_v_infinity;
use crate::numerics::{integrate, substream, uniform, QuadratureSpec};

/// Guarantee attached to the exact two-threshold schedule.
pub const TWO_THRESHOLD_BOUND: f64 = 0.708;

/// Trials per random sub-stream.
pub const BATCH: usize = 1024;

/// Cells in each tabulated quantile law.
const TABLE_CELLS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    SampleDensity,
    DeterministicMidpoint,
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample-density" => Ok(ScheduleMode::SampleDensity),
            "deterministic-midpoint" => Ok(ScheduleMode::DeterministicMidpoint),
            _ => Err(Error::InvalidParameter(format!("unknown schedule mode {s:?}"))),
        }
    }
}

/// Tabulated quantile law of one window of an infinite-model schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointDensity {
    /// 1-based window index.
    pub window: usize,
    pub y_lo: f64,
    pub y_hi: f64,
    k: usize,
    n: usize,
    s: Vec<f64>,
    cum: Vec<f64>,
}

fn s_density(k: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    // k^2 s^(k-1) (-log s) / (1 - s); the last factor tends to 1 at s = 1.
    let r = 1.0 - s;
    let tail = if r <= 0.0 { 1.0 } else { -(-r).ln_1p() / r };
    k * k * s.powf(k - 1.0) * tail
}

impl BreakpointDensity {
    fn new(window: usize, y_lo: f64, y_hi: f64, k: usize, n: usize) -> Result<Self> {
        let kf = k as f64;
        let (s_lo, s_hi) = (y_lo.powf(kf.recip()), y_hi.powf(kf.recip()));
        if !(s_hi > s_lo) {
            return Err(Error::InvalidParameter(format!(
                "window {window} has an empty y-interval ({y_lo}, {y_hi})"
            )));
        }
        let spec = QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 10_000,
        };
        let h = (s_hi - s_lo) / TABLE_CELLS as f64;
        let s: Vec<f64> = (0..=TABLE_CELLS)
            .map(|j| if j == TABLE_CELLS { s_hi } else { s_lo + h * j as f64 })
            .collect();
        let mut cum = Vec::with_capacity(TABLE_CELLS + 1);
        cum.push(0.0);
        for j in 0..TABLE_CELLS {
            let piece = integrate(|x| s_density(kf, x), s[j], s[j + 1], &spec)?;
            cum.push(cum[j] + piece);
        }
        Ok(Self {
            window,
            y_lo,
            y_hi,
            k,
            n,
            s,
            cum,
        })
    }

    /// Quantile at probability level `u` of the window's law.
    pub fn quantile_at(&self, u: f64) -> f64 {
        let total = *self.cum.last().expect("nonempty table");
        let target = u.clamp(0.0, 1.0) * total;
        let j = self.cum.partition_point(|&c| c <= target).clamp(1, TABLE_CELLS) - 1;
        let width = self.cum[j + 1] - self.cum[j];
        let frac = if width > 0.0 { ((target - self.cum[j]) / width).clamp(0.0, 1.0) } else { 0.0 };
        let s = self.s[j] + frac * (self.s[j + 1] - self.s[j]);
        if s <= 0.0 {
            return 1.0;
        }
        (-(self.k as f64) * s.ln() / (self.n - 1) as f64).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantileRule {
    Deterministic(f64),
    BreakpointDensity(BreakpointDensity),
}

impl QuantileRule {
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            QuantileRule::Deterministic(q) => *q,
            QuantileRule::BreakpointDensity(d) => d.quantile_at(uniform(rng)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDescriptor {
    pub kind: String,
    pub n: usize,
    pub k: usize,
    pub tau: Vec<usize>,
    /// Fixed quantile per window, `None` for sampled windows.
    pub quantiles: Vec<Option<f64>>,
    /// `(y_lo, y_hi)` of each sampled window.
    pub y_intervals: Vec<Option<(f64, f64)>>,
    /// Certified ratio the schedule is checked against, if any.
    pub bound: Option<f64>,
    /// Set for schedules without a proven guarantee.
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSchedule {
    pub plan: WindowPlan,
    pub rules: Vec<QuantileRule>,
    kind: String,
    bound: Option<f64>,
    heuristic: bool,
}

impl QuantileSchedule {
    pub fn new(plan: WindowPlan, rules: Vec<QuantileRule>) -> Result<Self> {
        Self::labelled(plan, rules, "custom", None, false)
    }

    fn labelled(
        plan: WindowPlan,
        rules: Vec<QuantileRule>,
        kind: &str,
        bound: Option<f64>,
        heuristic: bool,
    ) -> Result<Self> {
        if rules.len() != plan.k {
            return Err(Error::InvalidParameter(format!(
                "{} rules for {} windows",
                rules.len(),
                plan.k
            )));
        }
        let fixed: Vec<f64> = rules
            .iter()
            .filter_map(|r| match r {
                QuantileRule::Deterministic(q) => Some(*q),
                QuantileRule::BreakpointDensity(_) => None,
            })
            .collect();
        if let Some(q) = fixed.iter().find(|q| !(**q > 0.0 && **q <= 1.0)) {
            return Err(Error::InvalidParameter(format!("quantile {q} outside (0, 1]")));
        }
        if fixed.len() == rules.len() && fixed.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(format!(
                "deterministic quantiles {fixed:?} must be nondecreasing"
            )));
        }
        Ok(Self {
            plan,
            rules,
            kind: kind.into(),
            bound,
            heuristic,
        })
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn descriptor(&self) -> ScheduleDescriptor {
        ScheduleDescriptor {
            kind: self.kind.clone(),
            n: self.plan.n,
            k: self.plan.k,
            tau: self.plan.tau.clone(),
            quantiles: self
                .rules
                .iter()
                .map(|r| match r {
                    QuantileRule::Deterministic(q) => Some(*q),
                    QuantileRule::BreakpointDensity(_) => None,
                })
                .collect(),
            y_intervals: self
                .rules
                .iter()
                .map(|r| match r {
                    QuantileRule::Deterministic(_) => None,
                    QuantileRule::BreakpointDensity(d) => Some((d.y_lo, d.y_hi)),
                })
                .collect(),
            bound: self.bound,
            heuristic: self.heuristic,
        }
    }
}

/// One window with threshold quantile `1/n`.
pub fn schedule_single_threshold(n: usize) -> Result<QuantileSchedule> {
    let plan = WindowPlan::equal(n, 1)?;
    let bound = gamma_n_1::<f64>(n)?;
    QuantileSchedule::labelled(
        plan,
        vec![QuantileRule::Deterministic(1.0 / n as f64)],
        "single-threshold",
        Some(bound),
        false,
    )
}

/// Equal windows driven by the optimal infinite-model breakpoints.
///
/// The midpoint mode uses the median of each window's law and carries no bound.
pub fn schedule_from_infinite(k: usize, n: usize, mode: ScheduleMode) -> Result<QuantileSchedule> {
    let plan = WindowPlan::equal(n, k)?;
    let kind = match mode {
        ScheduleMode::SampleDensity => "infinite-sample-density",
        ScheduleMode::DeterministicMidpoint => "infinite-deterministic-midpoint",
    };
    if n == 1 {
        return QuantileSchedule::labelled(plan, vec![QuantileRule::Deterministic(1.0)], kind, Some(1.0), false);
    }
    let opt = solve_v_infinity(k, 1e-10f64)?;
    let mut rules = Vec::with_capacity(k);
    for t in 1..=k {
        let table = BreakpointDensity::new(t, opt.y[t], opt.y[t - 1], k, n)?;
        rules.push(match mode {
            ScheduleMode::SampleDensity => QuantileRule::BreakpointDensity(table),
            ScheduleMode::DeterministicMidpoint => QuantileRule::Deterministic(table.quantile_at(0.5)),
        });
    }
    let kf = k as f64;
    let bound = match mode {
        ScheduleMode::SampleDensity => Some(opt.v * (1.0 - kf * kf / n as f64).max(0.0)),
        ScheduleMode::DeterministicMidpoint => None,
    };
    QuantileSchedule::labelled(plan, rules, kind, bound, mode == ScheduleMode::DeterministicMidpoint)
}

/// Two windows split at `ceil(theta n)` with quantiles `a_1/n` and `a_2/n`.
pub fn schedule_two_threshold_exact(n: usize) -> Result<QuantileSchedule> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("the two-threshold schedule needs n >= 4, got {n}")));
    }
    let c = two_threshold_exact::<f64>()?;
    let plan = WindowPlan::two_windows(n, c.theta)?;
    let nf = n as f64;
    QuantileSchedule::labelled(
        plan,
        vec![
            QuantileRule::Deterministic((c.a1 / nf).min(1.0)),
            QuantileRule::Deterministic((c.a2 / nf).min(1.0)),
        ],
        "two-threshold-exact",
        Some(TWO_THRESHOLD_BOUND),
        false,
    )
}

/// Accepted value, or `None` if every window passes.
pub fn run_once_detailed<R: rand::Rng + ?Sized>(
    schedule: &QuantileSchedule,
    d: &Distribution,
    rng: &mut R,
) -> Option<f64> {
    for (rule, &tau) in schedule.rules.iter().zip(&schedule.plan.tau) {
        let q = rule.draw(rng);
        let x = if q <= 0.0 { f64::INFINITY } else { d.upper_quantile(q) };
        for _ in 0..tau {
            let value = d.sample(rng);
            if value >= x {
                return Some(value);
            }
        }
    }
    None
}

/// Accepted value, 0 if nothing is accepted.
pub fn run_once<R: rand::Rng + ?Sized>(schedule: &QuantileSchedule, d: &Distribution, rng: &mut R) -> f64 {
    run_once_detailed(schedule, d, rng).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub policy_value: f64,
    pub policy_stderr: f64,
    pub prophet_value: f64,
    /// Zero when the prophet value came from quadrature.
    pub prophet_stderr: f64,
    /// `false` when quadrature failed and Monte Carlo was used instead.
    pub prophet_exact: bool,
    pub ratio: f64,
    /// Standard error of `ratio`.
    pub stderr: f64,
    pub acceptance_rate: f64,
    pub trials: usize,
    pub seed: u64,
    pub distribution: Descriptor,
    pub schedule: ScheduleDescriptor,
    pub bound: Option<f64>,
    /// `ratio >= bound - 3 stderr`.
    pub bound_met: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
    accepted: usize,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        let count = a.count + b.count;
        if count == 0.0 {
            return a;
        }
        let delta = b.mean - a.mean;
        Moments {
            count,
            mean: a.mean + delta * b.count / count,
            m2: a.m2 + b.m2 + delta * delta * a.count * b.count / count,
            accepted: a.accepted + b.accepted,
        }
    }
}

fn pairwise(parts: &[Moments]) -> Moments {
    match parts.len() {
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            Moments::merge(pairwise(l), pairwise(r))
        }
    }
}

fn prophet_spec() -> QuadratureSpec<f64> {
    QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_subdivisions: 100_000,
    }
}

/// Monte Carlo ratio of the schedule against `E[max]`.
///
/// Batch `b` uses sub-stream `b` of `seed` and batches are combined in index
/// order, so the report does not depend on the number of worker threads.
pub fn simulate(schedule: &QuantileSchedule, d: &Distribution, trials: usize, seed: u64) -> Result<SimulationReport> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    let batches = trials.div_ceil(BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let size = BATCH.min(trials - b * BATCH);
            let mut m = Moments {
                count: 0.0,
                mean: 0.0,
                m2: 0.0,
                accepted: 0,
            };
            for _ in 0..size {
                let v = run_once_detailed(schedule, d, &mut rng);
                if v.is_some() {
                    m.accepted += 1;
                }
                m.push(v.unwrap_or(0.0));
            }
            m
        })
        .collect();
    let m = pairwise(&parts);
    let t = trials as f64;
    let policy_stderr = (m.m2 / (t - 1.0) / t).sqrt();
    let n = schedule.plan.n;
    let (prophet_value, prophet_stderr, prophet_exact) = match prophet_value_exact(d, n, &prophet_spec()) {
        Ok(p) if p.is_finite() && p > 0.0 => (p, 0.0, true),
        _ => {
            let mut rng = substream(seed, u64::MAX);
            let (p, se) = prophet_value_monte_carlo(d, n, trials, &mut rng);
            (p, se, false)
        }
    };
    let ratio = m.mean / prophet_value;
    let stderr = if prophet_exact {
        policy_stderr / prophet_value
    } else {
        let rel_p = if m.mean > 0.0 { policy_stderr / m.mean } else { 0.0 };
        ratio.abs() * (rel_p.powi(2) + (prophet_stderr / prophet_value).powi(2)).sqrt()
    };
    let bound = schedule.bound();
    Ok(SimulationReport {
        policy_value: m.mean,
        policy_stderr,
        prophet_value,
        prophet_stderr,
        prophet_exact,
        ratio,
        stderr,
        acceptance_rate: m.accepted as f64 / t,
        trials,
        seed,
        distribution: d.descriptor(),
        schedule: schedule.descriptor(),
        bound,
        bound_met: bound.map(|b| ratio >= b - 3.0 * stderr),
    })
}
