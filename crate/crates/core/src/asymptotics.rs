//! Large-`k` behaviour of the infinite model.
//!
//! `I(beta) = int_0^1 dw / (beta - 1 + w (1 - log w))` crosses 1 at `beta_bar`,
//! and `1 / beta_bar` is the limit of the infinite-model values as `k` grows.
//! The breakpoints of the `k`-window optimum are trapped between two explicit
//! Euler sequences of the ODE `w' = w (log w - 1) - (beta - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infinite_model::solve_v_infinity;
use crate::numerics::{find_root_monotone, integrate, QuadratureSpec, RootBracket};
use crate::scalar::{x_one_minus_log, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBar<T> {
    pub beta: T,
    pub gamma: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerTrace<T> {
    pub k: usize,
    pub beta: T,
    /// `x_0..x_k` with step `1/k`.
    pub x: Vec<T>,
    /// `z_0..z_k` with step `1/((32k)^(1/k) k)`.
    pub z: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow<T> {
    pub t: usize,
    pub x: T,
    pub y: T,
    pub z: T,
    /// `y_t - x_t`
    pub above_x: T,
    /// `x_t + 4 log(32k)/k - y_t`
    pub below_band: T,
    /// `z_t - y_t`
    pub below_z: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport<T> {
    pub k: usize,
    pub v: T,
    pub beta: T,
    pub band: T,
    pub rows: Vec<SandwichRow<T>>,
    /// `y_{k-l} - l/(32k)` for `l = 1..k`.
    pub tail_margins: Vec<T>,
    /// Human-readable description of every violated inequality.
    pub violations: Vec<String>,
}

impl<T> SandwichReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `I(beta)` for `beta > 1`.
#[allow(non_snake_case)]
pub fn I<T: Real>(beta: T) -> Result<T> {
    if !(beta > T::one()) {
        return Err(Error::InvalidParameter(format!("I needs beta > 1, got {beta}")));
    }
    let c = beta - T::one();
    integrate(|w| (c + x_one_minus_log(w)).recip(), T::zero(), T::one(), &QuadratureSpec::default())
}

/// Root of `I(beta) = 1` on `[1.25, 1.5]`.
pub fn beta_bar<T: Real>(tol: T) -> Result<BetaBar<T>> {
    let g = |b: T| I(b).map(|v| v - T::one()).unwrap_or(T::nan());
    let bracket = RootBracket::probe(&g, T::lit(1.25), T::lit(1.5))?;
    let beta = find_root_monotone(g, bracket, tol)?;
    Ok(BetaBar {
        beta,
        gamma: beta.recip(),
    })
}

fn euler_step<T: Real>(w: T, beta: T, h: T) -> T {
    (w - h * (beta - T::one() + x_one_minus_log(w))).max(T::zero())
}

pub fn euler_sequences<T: Real>(k: usize, beta: T) -> Result<EulerTrace<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(beta >= T::lit(1.25)) {
        return Err(Error::InvalidParameter(format!("beta must be at least 1.25, got {beta}")));
    }
    let kf = T::from_usize_lossy(k);
    let hx = kf.recip();
    let hz = ((T::lit(32.0) * kf).powf(kf.recip()) * kf).recip();
    let mut x = vec![T::one()];
    let mut z = vec![T::one()];
    for t in 0..k {
        x.push(euler_step(x[t], beta, hx));
        z.push(euler_step(z[t], beta, hz));
    }
    Ok(EulerTrace { k, beta, x, z })
}

/// Checks `x_t <= y_t <= z_t`, `y_t <= x_t + 4 log(32k)/k` and
/// `y_{k-l} >= l/(32k)` against the optimal breakpoints, with `beta = 1/v`.
pub fn verify_sandwich<T: Real>(k: usize) -> Result<SandwichReport<T>> {
    if k < 6 {
        return Err(Error::InvalidParameter(format!("the sandwich needs k >= 6, got {k}")));
    }
    let opt = solve_v_infinity(k, T::lit(1e-10).max(T::lit(16.0) * T::epsilon()))?;
    let beta = opt.v.recip();
    let trace = euler_sequences(k, beta)?;
    let kf = T::from_usize_lossy(k);
    let band = T::lit(4.0) * (T::lit(32.0) * kf).ln() / kf;
    // Breakpoints come out of bisection with this much play.
    let slack = T::lit(1e-9);
    let mut violations = Vec::new();
    let rows: Vec<SandwichRow<T>> = (0..=k)
        .map(|t| {
            let (x, y, z) = (trace.x[t], opt.y[t], trace.z[t]);
            let row = SandwichRow {
                t,
                x,
                y,
                z,
                above_x: y - x,
                below_band: x + band - y,
                below_z: z - y,
            };
            if row.above_x < -slack {
                violations.push(format!("t={t}: y={y} below x={x}"));
            }
            if row.below_band < -slack {
                violations.push(format!("t={t}: y={y} above x + band = {}", x + band));
            }
            if row.below_z < -slack {
                violations.push(format!("t={t}: y={y} above z={z}"));
            }
            row
        })
        .collect();
    let tail_margins: Vec<T> = (1..=k)
        .map(|l| {
            let m = opt.y[k - l] - T::from_usize_lossy(l) / (T::lit(32.0) * kf);
            if m < -slack {
                violations.push(format!("l={l}: y_{} below l/(32k)", k - l));
            }
            m
        })
        .collect();
    Ok(SandwichReport {
        k,
        v: opt.v,
        beta,
        band,
        rows,
        tail_margins,
        violations,
    })
}

/// Diagnostic envelopes `gamma_bar (1 - 512 log(32k)/k)` and `gamma_bar (1 - 4 log(32k)/k)`.
/// The lower one is negative until `k` is in the tens of thousands.
pub fn asymptotic_bands<T: Real>(k: usize) -> Result<(T, T)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let g = beta_bar(T::lit(1e-12).max(T::lit(16.0) * T::epsilon()))?.gamma;
    let kf = T::from_usize_lossy(k);
    let l = (T::lit(32.0) * kf).ln() / kf;
    Ok((g * (T::one() - T::lit(512.0) * l), g * (T::one() - T::lit(4.0) * l)))
}
