//! The epsilon recursion.
//!
//! Window `t` accepts quantiles in `[eps_{t-1}, eps_t)`. Everything is scaled by
//! `n (n - 1)` so the quantities handed to quadrature are of order one:
//!
//! ```text
//! int_{eps_{t-1}}^{eps_t} psi_{tau_t}(q) dq = 1/v - G(eps_{t-1})
//! psi_tau(q) = n (n-1) q (1-q)^(n-2) / (1 - (1-q)^tau)
//! G(e)       = 1 - (1-e)^(n-1) (1 + (n-1) e)
//! ```
//!
//! `G` is the scaled closed form of `int_0^e q (1-q)^(n-2) dq`.

use serde::{Deserialize, Serialize};

use super::WindowPlan;
use crate::error::{Error, Result};
use crate::numerics::{bisect_predicate, geometric_breaks, integrate_piecewise, QuadratureSpec};
use crate::scalar::{pow_one_minus, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule<T> {
    pub plan: WindowPlan,
    pub v: T,
    /// `eps_0 = 0, eps_1, ..., eps_k`.
    pub eps: Vec<T>,
    /// Scaled slack of the last window, `int_{eps_{k-1}}^1 psi - (1/v - G(eps_{k-1}))`.
    /// It is zero exactly when `eps_k` lands on 1.
    pub final_residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonOutcome<T> {
    /// Every window closed at or before `q = 1`.
    Reached(EpsilonSchedule<T>),
    /// Window `stage` (1-based) cannot collect its mass before `q = 1`, so `v`
    /// lies below the optimum. `shortfall` is the missing scaled mass.
    Unreachable { stage: usize, shortfall: T, eps: Vec<T> },
}

impl<T> EpsilonOutcome<T> {
    pub fn is_reached(&self) -> bool {
        matches!(self, EpsilonOutcome::Reached(_))
    }
}

/// `n (n-1) int_0^e q (1-q)^(n-2) dq`.
pub fn scaled_g<T: Real>(n: usize, e: T) -> T {
    if e >= T::one() {
        return T::one();
    }
    let m = T::from_usize_lossy(n - 1);
    -(m * (-e).ln_1p() + (m * e).ln_1p()).exp_m1()
}

fn psi<T: Real>(n: T, tau: T, q: T) -> T {
    if q <= T::zero() {
        return n * (n - T::one()) / tau;
    }
    let body = n * (n - T::one()) * q * pow_one_minus(q, n - T::lit(2.0));
    if q >= T::one() {
        return body;
    }
    body / -(tau * (-q).ln_1p()).exp_m1()
}

/// `int_a^b psi_tau(q) dq`.
pub fn window_integral<T: Real>(n: usize, tau: usize, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T> {
    let nf = T::from_usize_lossy(n);
    let tf = T::from_usize_lossy(tau);
    integrate_piecewise(|q| psi(nf, tf, q), a, b, &geometric_breaks(nf.recip(), T::one()), spec)
}

fn spec<T: Real>() -> QuadratureSpec<T> {
    let tol = T::lit(1e-12).max(T::lit(128.0) * T::epsilon());
    QuadratureSpec {
        abs_tol: tol,
        rel_tol: tol,
        max_subdivisions: 100_000,
    }
}

/// Smallest `x` in `[a, 1]` with `int_a^x psi >= target`, refining the
/// integral panel by panel so each quadrature covers only the new piece.
fn close_window<T: Real>(n: usize, tau: usize, a: T, target: T, spec: &QuadratureSpec<T>) -> Result<T> {
    let (mut lo, mut hi) = (a, T::one());
    let mut acc = T::zero();
    let half = T::lit(0.5);
    let tol = T::lit(1e-15).max(T::epsilon());
    while hi - lo > tol {
        let mid = lo + half * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let piece = window_integral(n, tau, lo, mid, spec)?;
        if acc + piece < target {
            lo = mid;
            acc = acc + piece;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Runs the recursion for a fixed `v`.
///
/// Any plan with nonempty windows is accepted; the dual certificate is only
/// built for equal-window plans.
pub fn epsilon_schedule<T: Real>(plan: &WindowPlan, v: T) -> Result<EpsilonOutcome<T>> {
    epsilon_schedule_with(plan, v, &spec())
}

fn epsilon_schedule_with<T: Real>(plan: &WindowPlan, v: T, spec: &QuadratureSpec<T>) -> Result<EpsilonOutcome<T>> {
    if !(v > T::zero()) {
        return Err(Error::InvalidParameter(format!("v must be positive, got {v}")));
    }
    let n = plan.n;
    if n < 2 {
        return Err(Error::InvalidParameter("the recursion needs n >= 2".into()));
    }
    let inv_v = v.recip();
    let mut eps = vec![T::zero()];
    for (t, &tau) in plan.tau.iter().enumerate() {
        let start = eps[t];
        let target = inv_v - scaled_g(n, start);
        let available = window_integral(n, tau, start, T::one(), spec)?;
        if target < T::zero() || available < target {
            // A negative target cannot occur in exact arithmetic; it only shows
            // up from rounding when the previous window already ended at 1.
            return Ok(EpsilonOutcome::Unreachable {
                stage: t + 1,
                shortfall: target - available,
                eps,
            });
        }
        let end = close_window(n, tau, start, target, spec)?;
        eps.push(end);
        if t + 1 == plan.k {
            return Ok(EpsilonOutcome::Reached(EpsilonSchedule {
                plan: plan.clone(),
                v,
                eps,
                final_residual: available - target,
            }));
        }
    }
    unreachable!("a plan has at least one window")
}

/// Optimal `v` for the plan: the value at which the last window closes exactly at `q = 1`.
///
/// The returned schedule is evaluated at the upper end of the final bracket
/// and has `eps_k` set to 1; its `final_residual` records how far from tight it is.
pub fn solve_v_finite<T: Real>(plan: &WindowPlan, delta: T) -> Result<EpsilonSchedule<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let spec = spec();
    let below = |v: T| Ok(!epsilon_schedule_with(plan, v, &spec)?.is_reached());
    let (_, hi) = bisect_predicate(below, T::lit(0.25), T::one(), delta)?;
    match epsilon_schedule_with(plan, hi, &spec)? {
        EpsilonOutcome::Reached(mut s) => {
            *s.eps.last_mut().expect("k >= 1") = T::one();
            Ok(s)
        }
        EpsilonOutcome::Unreachable { stage, .. } => Err(Error::NonConvergence(format!(
            "upper end of the v bracket failed at window {stage}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_g_matches_quadrature() {
        for &n in &[2usize, 10, 1000] {
            for &e in &[1e-4, 0.01, 0.3, 1.0] {
                let nf = n as f64;
                let q = integrate(
                    |q: f64| nf * (nf - 1.0) * q * pow_one_minus(q, nf - 2.0),
                    0.0,
                    e,
                    &QuadratureSpec::default(),
                )
                .unwrap();
                assert!((q - scaled_g(n, e)).abs() < 1e-9, "n={n} e={e}");
            }
        }
    }

    #[test]
    fn k1_value_is_reciprocal_of_full_integral() {
        let n = 50;
        let full = window_integral(n, n, 0.0, 1.0, &spec()).unwrap();
        let s = solve_v_finite(&WindowPlan::equal(n, 1).unwrap(), 1e-12f64).unwrap();
        assert!((s.v - 1.0 / full).abs() < 1e-9);
        assert_eq!(s.eps, vec![0.0, 1.0]);
    }

    #[test]
    fn n2_k1_closed_form() {
        let s = solve_v_finite(&WindowPlan::equal(2, 1).unwrap(), 1e-12f64).unwrap();
        assert!((s.v - 0.5 / 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn eps_k_of_one_below_one() {
        match epsilon_schedule(&WindowPlan::equal(100, 5).unwrap(), 1.0f64).unwrap() {
            EpsilonOutcome::Reached(s) => assert!(s.eps[5] < 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn first_breakpoint_decreases_in_v() {
        let plan = WindowPlan::equal(100, 5).unwrap();
        let first = |v: f64| match epsilon_schedule(&plan, v).unwrap() {
            EpsilonOutcome::Reached(s) => s.eps[1],
            EpsilonOutcome::Unreachable { eps, .. } => eps.get(1).copied().unwrap_or(1.0),
        };
        assert!(first(0.5) > first(0.6));
    }

    #[test]
    fn large_n_near_basel() {
        let s = solve_v_finite(&WindowPlan::equal(10_000, 1).unwrap(), 1e-10f64).unwrap();
        assert!((s.v - 6.0 / (PI * PI)).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_input() {
        let plan = WindowPlan::equal(10, 2).unwrap();
        assert!(epsilon_schedule(&plan, 0.0f64).is_err());
        assert!(epsilon_schedule(&WindowPlan::new(vec![1]).unwrap(), 0.5f64).is_err());
    }
}
