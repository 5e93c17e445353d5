//! Dual certificate for an optimal epsilon schedule.
//!
//! With `h_r = (1-e_r)^{tau_{r+1}} (1 - (1-e_r)^{tau_r}) / (1 - (1-e_r)^{tau_{r+1}})`
//! the coefficients satisfy `a_t - a_{t+1} = (a_{t+1} - a_{t+2}) h_t`, `a_{k+1} = 0`.
//! The dual measure has CDF
//!
//! ```text
//! F(q) = (a_t - a_{t+1} (1-q)^{tau_t}) q / (1 - (1-q)^{tau_t})   on [e_{t-1}, e_t)
//! ```
//!
//! and `d_t = sup_q (1 - (1-q)^{tau_t}) / q * F(q) + (1-q)^{tau_t} d_{t+1}`.
//!
//! The overall scale of `a` is fixed by the measure's own normalisation
//! `n (n-1) int_0^1 F(q) (1-q)^(n-2) dq = 1`, computed by quadrature, so that
//! `a_1 = v*` is a checked consequence rather than an input.

use serde::{Deserialize, Serialize};

use super::EpsilonSchedule;
use crate::error::{Error, Result};
use crate::numerics::{geometric_breaks, integrate_piecewise, QuadratureSpec};
use crate::scalar::{pow_one_minus, Real};

/// Largest `|final_residual|` accepted as an optimal schedule.
pub const OPTIMALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate<T> {
    pub n: usize,
    pub tau: Vec<usize>,
    pub eps: Vec<T>,
    /// `a_1..a_{k+1}` with `a_{k+1} = 0`.
    pub a: Vec<T>,
    /// `h_1..h_{k-1}`.
    pub h: Vec<T>,
    /// `d_1..d_k`.
    pub d: Vec<T>,
    /// Primal value of the schedule the certificate was built from.
    pub v: T,
}

fn ratio<T: Real>(q: T, tau: T) -> T {
    // q / (1 - (1-q)^tau), limit 1/tau at 0.
    if q <= T::zero() {
        return tau.recip();
    }
    if q >= T::one() {
        return T::one();
    }
    q / -(tau * (-q).ln_1p()).exp_m1()
}

impl<T: Real> DualCertificate<T> {
    pub fn k(&self) -> usize {
        self.tau.len()
    }

    /// Piece `t` (1-based) of `F`, evaluated anywhere in `[0, 1]`.
    pub fn f_piece(&self, t: usize, q: T) -> T {
        let tau = T::from_usize_lossy(self.tau[t - 1]);
        (self.a[t - 1] - self.a[t] * pow_one_minus(q, tau)) * ratio(q, tau)
    }

    /// Window owning `q`: the `t` with `q` in `[e_{t-1}, e_t)`, and `k` for `q >= e_{k-1}`.
    pub fn window_of(&self, q: T) -> usize {
        let k = self.k();
        (1..k).find(|&t| q < self.eps[t]).unwrap_or(k)
    }

    /// CDF of the dual measure.
    pub fn f(&self, q: T) -> T {
        if q < T::zero() {
            return T::zero();
        }
        let q = q.min(T::one());
        self.f_piece(self.window_of(q), q)
    }

    /// `(1 - (1-q)^tau_t) / q * F(q) + (1-q)^tau_t * next`.
    pub fn g(&self, t: usize, q: T, next: T) -> T {
        let tau = T::from_usize_lossy(self.tau[t - 1]);
        self.f(q) / ratio(q, tau) + pow_one_minus(q, tau) * next
    }

    /// `|F(e_t^-) - F(e_t^+)|` at every interior breakpoint.
    pub fn continuity_gaps(&self) -> Vec<T> {
        (1..self.k())
            .map(|t| (self.f_piece(t, self.eps[t]) - self.f_piece(t + 1, self.eps[t])).abs())
            .collect()
    }

    /// `n (n-1) int_0^1 F(q) (1-q)^(n-2) dq`; equals 1 for a feasible dual measure.
    pub fn normalization(&self) -> Result<T> {
        normalization(self, &quad_spec())
    }
}

fn quad_spec<T: Real>() -> QuadratureSpec<T> {
    let tol = T::lit(1e-13).max(T::lit(128.0) * T::epsilon());
    QuadratureSpec {
        abs_tol: tol,
        rel_tol: tol,
        max_subdivisions: 100_000,
    }
}

fn normalization<T: Real>(c: &DualCertificate<T>, spec: &QuadratureSpec<T>) -> Result<T> {
    let nf = T::from_usize_lossy(c.n);
    let scale = nf * (nf - T::one());
    let breaks = geometric_breaks(nf.recip(), T::one());
    let mut total = T::zero();
    for t in 1..=c.k() {
        let piece = integrate_piecewise(
            |q| c.f_piece(t, q) * pow_one_minus(q, nf - T::lit(2.0)),
            c.eps[t - 1],
            c.eps[t],
            &breaks,
            spec,
        )?;
        total = total + piece;
    }
    Ok(scale * total)
}

/// Builds `(a, h, F, d)` for an optimal equal-window schedule.
pub fn dual_certificate<T: Real>(schedule: &EpsilonSchedule<T>) -> Result<DualCertificate<T>> {
    let plan = &schedule.plan;
    let k = plan.k;
    if !plan.is_equal_window() {
        return Err(Error::CertificateUndefined(format!(
            "plan {:?} is not an equal-window plan",
            plan.tau
        )));
    }
    if schedule.eps.len() != k + 1 || *schedule.eps.last().expect("nonempty") != T::one() {
        return Err(Error::CertificateUndefined("last breakpoint is not 1".into()));
    }
    if !(schedule.final_residual.abs() <= T::lit(OPTIMALITY_TOL)) {
        return Err(Error::CertificateUndefined(format!(
            "schedule is not optimal: last window slack {}",
            schedule.final_residual
        )));
    }
    let eps = &schedule.eps;
    let h: Vec<T> = (1..k)
        .map(|r| {
            let cur = T::from_usize_lossy(plan.tau[r - 1]);
            let nxt = T::from_usize_lossy(plan.tau[r]);
            let e = eps[r];
            pow_one_minus(e, nxt) * (T::one() - pow_one_minus(e, cur)) / (T::one() - pow_one_minus(e, nxt))
        })
        .collect();
    // Unnormalised: a_k = 1, a_{k+1} = 0.
    let mut a = vec![T::zero(); k + 1];
    a[k - 1] = T::one();
    for t in (1..k).rev() {
        a[t - 1] = a[t] + (a[t] - a[t + 1]) * h[t - 1];
    }
    let mut cert = DualCertificate {
        n: plan.n,
        tau: plan.tau.clone(),
        eps: eps.clone(),
        a,
        h,
        d: Vec::new(),
        v: schedule.v,
    };
    let mass = normalization(&cert, &quad_spec())?;
    if !(mass > T::zero()) {
        return Err(Error::NonConvergence(format!("dual measure has mass {mass}")));
    }
    for x in cert.a.iter_mut() {
        *x = *x / mass;
    }
    // Backward recursion; the supremum over [0, 1] is attained on the breakpoints.
    let mut d = vec![T::zero(); k + 1];
    for t in (1..=k).rev() {
        d[t - 1] = eps
            .iter()
            .map(|&q| cert.g(t, q, d[t]))
            .fold(T::neg_infinity(), T::max);
    }
    d.truncate(k);
    cert.d = d;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_model::{solve_v_finite, WindowPlan};

    fn cert(n: usize, k: usize) -> DualCertificate<f64> {
        let s = solve_v_finite(&WindowPlan::equal(n, k).unwrap(), 1e-12).unwrap();
        dual_certificate(&s).unwrap()
    }

    #[test]
    fn single_window() {
        let c = cert(40, 1);
        assert!((c.a[0] - c.v).abs() < 1e-7);
        assert!((c.d[0] - c.v).abs() < 1e-7);
        // F(q) = a_1 q / (1 - (1-q)^n), so g_1 is flat at a_1.
        for i in 1..50 {
            let q = i as f64 / 50.0;
            assert!((c.g(1, q, 0.0) - c.a[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn four_windows() {
        let c = cert(100, 4);
        assert!(c.a.windows(2).all(|w| w[0] >= w[1]));
        assert!(c.a[3] > 0.0);
        assert!(c.continuity_gaps().iter().all(|&g| g < 1e-9));
        for (a, d) in c.a.iter().zip(&c.d) {
            assert!((a - d).abs() < 1e-6);
        }
        assert!((c.a[0] - c.v).abs() < 1e-6);
    }

    #[test]
    fn a_matches_sum_of_products() {
        let c = cert(60, 3);
        let k = 3;
        let raw = |t: usize| {
            let mut s = 1.0;
            for from in t..k {
                s += (from..k).map(|r| c.h[r - 1]).product::<f64>();
            }
            s
        };
        for t in 1..=k {
            let expected = c.v * raw(t) / raw(1);
            assert!((c.a[t - 1] - expected).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn rejects_non_optimal() {
        let plan = WindowPlan::equal(30, 2).unwrap();
        let mut s = solve_v_finite(&plan, 1e-12).unwrap();
        s.final_residual = 0.1;
        assert!(matches!(dual_certificate(&s), Err(Error::CertificateUndefined(_))));
        let mut s = solve_v_finite(&plan, 1e-12).unwrap();
        s.eps[2] = 0.9;
        assert!(dual_certificate(&s).is_err());
    }
}
