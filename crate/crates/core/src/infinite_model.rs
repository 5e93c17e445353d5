//! The large-`n` limit of the window relaxation.
//!
//! Quantiles are rescaled as `q = -log(y) / n`, so window `t` owns the
//! interval `(y_t, y_{t-1})` of `[0, 1]`. With
//! `H(x) = int_0^x -log(y) / (1 - y^(1/k)) dy` and `G(y) = y (1 - log y)` the
//! feasibility system for a value `v` reads
//!
//! ```text
//! 1/v - H(y_0) + H(y_1)                                          >= 0
//! H(y_{t-2}) - 2 H(y_{t-1}) + H(y_t) - G(y_{t-2}) + G(y_{t-1})   >= 0   t = 2..k
//! ```
//!
//! with `y_0 = 1`, `y_k = 0`. Each `y_t` is pushed as low as its own
//! constraint allows; the last constraint then decides feasibility.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect_predicate, integrate_with_substitution, QuadratureSpec};
use crate::scalar::{x_one_minus_log, Real};

/// Largest `k` accepted by [`solve_v_infinity`].
pub const MAX_K: usize = 64;

/// Tolerance on breakpoint bisections.
const Y_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfiniteBreakpoints<T> {
    pub k: usize,
    pub v: T,
    /// `y_0 = 1, y_1, ..., y_k = 0`.
    pub y: Vec<T>,
    /// Slack of each of the `k` constraints at `(v, y)`.
    pub residuals: Vec<T>,
}

/// Result of the greedy pass for a fixed `v`.
#[derive(Debug, Clone, PartialEq)]
pub enum GreedyOutcome<T> {
    Feasible(InfiniteBreakpoints<T>),
    /// Constraint `stage` (1-based) cannot be met; `y` holds the breakpoints fixed so far.
    Infeasible { stage: usize, residual: T, y: Vec<T> },
}

impl<T> GreedyOutcome<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, GreedyOutcome::Feasible(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoThresholdTheta<T> {
    pub theta: T,
    pub v: T,
    pub y1: T,
    /// Slack of the two constraints at `(v, y1)`.
    pub residuals: [T; 2],
}

fn check_unit<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::InvalidParameter(format!("x = {x} outside [0, 1]")));
    }
    Ok(())
}

fn h_phi_with<T: Real>(phi: T, x: T, spec: &QuadratureSpec<T>) -> Result<T> {
    if x <= T::zero() {
        return Ok(T::zero());
    }
    // With s = y^phi the integrand is (-log s / phi) / (1 - s), limit 1/phi at s = 1.
    let inv = phi.recip();
    integrate_with_substitution(
        |s: T, _y: T| {
            let d = T::one() - s;
            if d <= T::zero() {
                inv
            } else {
                -s.ln() * inv / d
            }
        },
        inv,
        T::zero(),
        x,
        spec,
    )
}

/// `H_phi(x) = int_0^x -log(y) / (1 - y^phi) dy` for `0 < phi <= 1`.
#[allow(non_snake_case)]
pub fn H_phi<T: Real>(phi: T, x: T) -> Result<T> {
    if !(phi > T::zero() && phi <= T::one()) {
        return Err(Error::InvalidParameter(format!("phi = {phi} outside (0, 1]")));
    }
    check_unit(x)?;
    h_phi_with(phi, x, &QuadratureSpec::default())
}

/// `H(k, x) = H_phi(1/k, x)`.
#[allow(non_snake_case)]
pub fn H<T: Real>(k: usize, x: T) -> Result<T> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    H_phi(T::from_usize_lossy(k).recip(), x)
}

/// Smallest `y` in `[0, hi]` with `c + h(y) >= 0`, for increasing `h`.
/// `None` when even `y = hi` fails.
fn lowest_feasible<T: Real, F>(c: T, hi: T, h_hi: T, h: F) -> Result<Option<(T, T)>>
where
    F: Fn(T) -> Result<T>,
{
    if c >= T::zero() {
        return Ok(Some((T::zero(), T::zero())));
    }
    if c + h_hi < T::zero() {
        return Ok(None);
    }
    // holds(y) := y is still infeasible, true at 0 and false at hi.
    let (_, y) = bisect_predicate(|y: T| Ok(c + h(y)? < T::zero()), T::zero(), hi, T::lit(Y_TOL))
        .or_else(|e| match e {
            // c + h(hi) == 0 exactly
            Error::BracketInvalid { .. } => Ok((hi, hi)),
            other => Err(other),
        })?;
    Ok(Some((y, h(y)?)))
}

struct Stages<T> {
    y: Vec<T>,
    h: Vec<T>,
    residuals: Vec<T>,
}

/// Greedy breakpoints for a fixed `v`.
pub fn breakpoints_given_v<T: Real>(k: usize, v: T) -> Result<GreedyOutcome<T>> {
    breakpoints_with(k, v, &QuadratureSpec::default())
}

fn breakpoints_with<T: Real>(k: usize, v: T, spec: &QuadratureSpec<T>) -> Result<GreedyOutcome<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(v > T::zero()) {
        return Err(Error::InvalidParameter(format!("v must be positive, got {v}")));
    }
    let phi = T::from_usize_lossy(k).recip();
    let h = |x: T| h_phi_with(phi, x, spec);
    let g = x_one_minus_log::<T>;
    let two = T::lit(2.0);
    let mut st = Stages {
        y: vec![T::one()],
        h: vec![h(T::one())?],
        residuals: Vec::with_capacity(k),
    };
    for t in 1..=k {
        let c = if t == 1 {
            v.recip() - st.h[0]
        } else {
            st.h[t - 2] - two * st.h[t - 1] - g(st.y[t - 2]) + g(st.y[t - 1])
        };
        if t == k {
            // y_k = 0 and H(0) = 0.
            st.residuals.push(c);
            if c < T::zero() {
                return Ok(GreedyOutcome::Infeasible {
                    stage: t,
                    residual: c,
                    y: st.y,
                });
            }
            st.y.push(T::zero());
            st.h.push(T::zero());
            break;
        }
        match lowest_feasible(c, st.y[t - 1], st.h[t - 1], h)? {
            Some((y, hy)) => {
                st.y.push(y);
                st.h.push(hy);
                st.residuals.push(c + hy);
            }
            None => {
                return Ok(GreedyOutcome::Infeasible {
                    stage: t,
                    residual: c + st.h[t - 1],
                    y: st.y,
                })
            }
        }
    }
    Ok(GreedyOutcome::Feasible(InfiniteBreakpoints {
        k,
        v,
        y: st.y,
        residuals: st.residuals,
    }))
}

/// Bracket for `v` valid for every `k`: just below `6/pi^2` and just above `1/1.341`.
pub fn v_bracket<T: Real>() -> (T, T) {
    let six_over_pi2 = T::lit(6.0) / (T::PI() * T::PI());
    (six_over_pi2 - T::lit(0.01), T::lit(0.7453))
}

/// Largest feasible `v` up to `delta`, with its breakpoints.
pub fn solve_v_infinity<T: Real>(k: usize, delta: T) -> Result<InfiniteBreakpoints<T>> {
    if k == 0 || k > MAX_K {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside the supported range 1..={MAX_K}"
        )));
    }
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let spec = QuadratureSpec::default();
    let (lo, hi) = v_bracket::<T>();
    let (lo, _) = bisect_predicate(
        |v: T| Ok(breakpoints_with(k, v, &spec)?.is_feasible()),
        lo,
        hi,
        delta,
    )?;
    match breakpoints_with(k, lo, &spec)? {
        GreedyOutcome::Feasible(b) => Ok(b),
        GreedyOutcome::Infeasible { stage, .. } => Err(Error::NonConvergence(format!(
            "lower end of the v bracket became infeasible at stage {stage}"
        ))),
    }
}

fn theta_outcome<T: Real>(theta: T, v: T, spec: &QuadratureSpec<T>) -> Result<(bool, T, [T; 2])> {
    let h1 = h_phi_with(theta, T::one(), spec)?;
    let c = v.recip() - h1;
    let (y1, hy1) = match lowest_feasible(c, T::one(), h1, |x| h_phi_with(theta, x, spec))? {
        Some(p) => p,
        None => return Ok((false, T::one(), [c + h1, T::neg_infinity()])),
    };
    let r2 = h1 - hy1 - h_phi_with(T::one() - theta, y1, spec)? - T::one() + x_one_minus_log(y1);
    Ok((r2 >= T::zero(), y1, [c + hy1, r2]))
}

/// Two windows of relative lengths `theta` and `1 - theta`.
pub fn v_infinity_2_theta<T: Real>(theta: T, delta: T) -> Result<TwoThresholdTheta<T>> {
    if !(theta >= T::lit(0.5) && theta < T::one()) {
        return Err(Error::InvalidParameter(format!("theta = {theta} outside [1/2, 1)")));
    }
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let spec = QuadratureSpec::default();
    let (lo, hi) = v_bracket::<T>();
    let (v, _) = bisect_predicate(|v: T| Ok(theta_outcome(theta, v, &spec)?.0), lo, hi, delta)?;
    let (_, y1, residuals) = theta_outcome(theta, v, &spec)?;
    Ok(TwoThresholdTheta {
        theta,
        v,
        y1,
        residuals,
    })
}

/// Sweeps `theta = i / r` over `[1/2, 1)`. Ties go to the smaller `theta`.
pub fn optimize_theta<T: Real>(r: usize, delta: T) -> Result<(T, TwoThresholdTheta<T>)> {
    if r < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    let first = r.div_ceil(2);
    let rf = T::from_usize_lossy(r);
    let points: Vec<TwoThresholdTheta<T>> = (first..r)
        .into_par_iter()
        .map(|i| v_infinity_2_theta(T::from_usize_lossy(i) / rf, delta))
        .collect::<Result<_>>()?;
    let mut best = points[0].clone();
    for p in points.into_iter().skip(1) {
        if p.v > best.v {
            best = p;
        }
    }
    Ok((best.theta, best))
}
