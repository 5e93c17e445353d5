//! Finite-horizon solvers: window plans, the single-threshold constant, the
//! epsilon recursion and its dual certificate, and the exact two-threshold limit.

mod dual;
mod epsilon;
mod two_threshold;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use dual::{dual_certificate, DualCertificate};
pub use epsilon::{
    epsilon_schedule, solve_v_finite, window_integral, EpsilonOutcome, EpsilonSchedule,
    scaled_g,
};
pub use two_threshold::{two_threshold_exact, two_threshold_residual, TwoThresholdDual, TwoThresholdExact};

/// Window lengths `tau_1..tau_k` over a horizon of `n` arrivals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub n: usize,
    pub k: usize,
    pub tau: Vec<usize>,
}

impl WindowPlan {
    pub fn new(tau: Vec<usize>) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::InvalidParameter("a plan needs at least one window".into()));
        }
        if tau.contains(&0) {
            return Err(Error::InvalidParameter(format!("empty window in {tau:?}")));
        }
        Ok(Self {
            n: tau.iter().sum(),
            k: tau.len(),
            tau,
        })
    }

    /// `k - 1` windows of `ceil(n/k)` followed by the remainder `sigma`.
    pub fn equal(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        let tau = n.div_ceil(k);
        let used = (k - 1) * tau;
        if used >= n {
            return Err(Error::InvalidParameter(format!(
                "n={n}, k={k}: the last window of the ceil(n/k) plan is empty"
            )));
        }
        let mut windows = vec![tau; k - 1];
        windows.push(n - used);
        Self::new(windows)
    }

    /// Two windows with `tau_1 = ceil(theta n)`.
    pub fn two_windows(n: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta = {theta} outside (0, 1)")));
        }
        let first = (theta * n as f64).ceil() as usize;
        if first == 0 || first >= n {
            return Err(Error::InvalidParameter(format!(
                "n={n} too small for two windows at theta={theta}"
            )));
        }
        Self::new(vec![first, n - first])
    }

    /// First `k - 1` windows equal and the last one no longer.
    pub fn is_equal_window(&self) -> bool {
        let head = &self.tau[..self.k - 1];
        head.windows(2).all(|w| w[0] == w[1]) && head.first().is_none_or(|&t| self.tau[self.k - 1] <= t)
    }

    pub fn sigma(&self) -> usize {
        self.tau[self.k - 1]
    }
}

/// `1 - (1 - 1/n)^n`, the best single-threshold ratio.
pub fn gamma_n_1<T: Real>(n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nf = T::from_usize_lossy(n);
    Ok(-(nf * (-nf.recip()).ln_1p()).exp_m1())
}

/// Exact rational value of [`gamma_n_1`].
pub fn gamma_n_1_exact(n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nb = BigInt::from(n);
    let base = BigRational::new(&nb - BigInt::one(), nb);
    let mut pow = BigRational::one();
    for _ in 0..n {
        pow *= &base;
    }
    let g = BigRational::one() - pow;
    debug_assert!(!g.is_negative());
    Ok(g)
}
