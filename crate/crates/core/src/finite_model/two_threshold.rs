//! Two windows in the large-`n` limit with deterministic quantiles `a_1/n`, `a_2/n`.
//!
//! For a split `theta` the quantile `u = u_2` solves
//!
//! ```text
//! -e^{-u} - u e^{-u} = e^{-a_1 theta - a_2 (1-theta)} (1 - e^{-u} - u e^{-u}) - e^{-a_1 theta}
//! a_1 = 1 - u e^{-u} / (1 - e^{-u}),   a_2 = u + 1
//! ```
//!
//! and the guaranteed value is `1 - e^{-a_1 theta - a_2 (1-theta)}`, maximised
//! over `theta`. The dual is a piecewise linear function `a + b min(x, u) + c (x - u)^+`
//! whose coefficients solve a 3x3 linear system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{find_root_monotone, RootBracket};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoThresholdDual<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d1: T,
    pub d2: T,
    /// Largest absolute row residual of the 3x3 solve.
    pub system_residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoThresholdExact<T> {
    pub u2: T,
    pub theta: T,
    pub a1: T,
    pub a2: T,
    pub v_bar: T,
    /// Residual of the implicit equation at `(theta, u2)`.
    pub implicit_residual: T,
    /// `v e^{-u} - e^{-a_1 theta} (1 - e^{-a_2 (1-theta)}) / a_2`, zero at the optimum.
    pub stationarity: T,
    pub dual: TwoThresholdDual<T>,
}

pub fn a1_of<T: Real>(u: T) -> T {
    T::one() - u / u.exp_m1()
}

pub fn a2_of<T: Real>(u: T) -> T {
    u + T::one()
}

fn exponent<T: Real>(theta: T, u: T) -> T {
    a1_of(u) * theta + a2_of(u) * (T::one() - theta)
}

/// Left side minus right side of the implicit equation.
pub fn two_threshold_residual<T: Real>(theta: T, u: T) -> T {
    let eu = (-u).exp();
    let lhs = -eu - u * eu;
    let rhs = (-exponent(theta, u)).exp() * (T::one() - eu - u * eu) - (-a1_of(u) * theta).exp();
    lhs - rhs
}

const U_LO: f64 = 0.05;
const U_HI: f64 = 5.0;
const THETA_LO: f64 = 0.3;
const THETA_HI: f64 = 0.9;

fn u_of_theta<T: Real>(theta: T) -> Result<T> {
    let g = |u: T| two_threshold_residual(theta, u);
    let bracket = RootBracket::probe(&g, T::lit(U_LO), T::lit(U_HI))?;
    find_root_monotone(g, bracket, T::lit(1e-13).max(T::lit(4.0) * T::epsilon()))
}

fn value_of_theta<T: Real>(theta: T) -> Result<T> {
    let u = u_of_theta(theta)?;
    Ok(-(-exponent(theta, u)).exp_m1())
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
fn golden_max<T: Real, F>(f: F, lo: T, hi: T, tol: T) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    let r = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(T::lit(0.5) * (a + b))
}

/// Supremum of `f` over `[lo, hi]`: dense grid, then golden refinement around the best cell.
fn sup_on<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, points: usize) -> T {
    let step = (hi - lo) / T::from_usize_lossy(points);
    let mut best = (T::neg_infinity(), lo);
    for i in 0..=points {
        let x = lo + step * T::from_usize_lossy(i);
        let y = f(x);
        if y > best.0 {
            best = (y, x);
        }
    }
    let a = (best.1 - step).max(lo);
    let b = (best.1 + step).min(hi);
    let x = golden_max(|x| Ok(f(x)), a, b, T::lit(1e-12).max(T::epsilon()))
        .expect("closure never fails");
    best.0.max(f(x))
}

fn solve3<T: Real>(m: [[T; 3]; 3], rhs: [T; 3]) -> Result<[T; 3]> {
    let mut aug = [[T::zero(); 4]; 3];
    for i in 0..3 {
        aug[i][..3].copy_from_slice(&m[i]);
        aug[i][3] = rhs[i];
    }
    for col in 0..3 {
        let p = (col..3)
            .max_by(|&i, &j| aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty");
        if aug[p][col].abs() <= T::epsilon() {
            return Err(Error::NonConvergence("singular dual system".into()));
        }
        aug.swap(col, p);
        for i in 0..3 {
            if i != col {
                let factor = aug[i][col] / aug[col][col];
                for j in col..4 {
                    aug[i][j] = aug[i][j] - factor * aug[col][j];
                }
            }
        }
    }
    Ok([aug[0][3] / aug[0][0], aug[1][3] / aug[1][1], aug[2][3] / aug[2][2]])
}

fn dual<T: Real>(theta: T, u: T, a1: T, a2: T) -> Result<TwoThresholdDual<T>> {
    let one = T::one();
    let eu = (-u).exp();
    let s = one - theta;
    let e1 = (-theta * a1).exp();
    let e2 = (-s * a2).exp();
    let g1 = (one - e1) / a1;
    let dg1 = (theta * e1 * a1 - (one - e1)) / (a1 * a1);
    let kk = (one - e2) / a2;
    let dk = (s * e2 * a2 - (one - e2)) / (a2 * a2);
    let m = [
        [one, one - eu, eu],
        [
            dg1 - theta * e1 * kk,
            g1 + a1 * dg1 - theta * e1 * kk * u,
            -theta * e1 * kk * (a2 - u),
        ],
        [dk, dk * u, kk + dk * (a2 - u)],
    ];
    let rhs = [one, T::zero(), T::zero()];
    let [a, b, c] = solve3(m, rhs)?;
    let system_residual = (0..3)
        .map(|i| (m[i][0] * a + m[i][1] * b + m[i][2] * c - rhs[i]).abs())
        .fold(T::zero(), T::max);
    let slope = |x: T| a + b * x.min(u) + c * (x - u).max(T::zero());
    // (1 - e^{-phi x}) / x with its limit phi at 0.
    let frac = |phi: T, x: T| if x <= T::zero() { phi } else { -(-phi * x).exp_m1() / x };
    let x_max = T::lit(60.0);
    let d2 = sup_on(|x| frac(s, x) * slope(x), T::zero(), x_max, 60_000);
    let d1 = sup_on(
        |x| frac(theta, x) * slope(x) + (-theta * x).exp() * d2,
        T::zero(),
        x_max,
        60_000,
    );
    Ok(TwoThresholdDual {
        a,
        b,
        c,
        d1,
        d2,
        system_residual,
    })
}

/// Solves the two-threshold system and its dual.
pub fn two_threshold_exact<T: Real>() -> Result<TwoThresholdExact<T>> {
    let theta = golden_max(
        value_of_theta,
        T::lit(THETA_LO),
        T::lit(THETA_HI),
        T::lit(1e-8).max(T::lit(16.0) * T::epsilon().sqrt()),
    )?;
    let u = u_of_theta(theta)?;
    let a1 = a1_of(u);
    let a2 = a2_of(u);
    let v_bar = -(-exponent(theta, u)).exp_m1();
    let stationarity =
        v_bar * (-u).exp() - (-a1 * theta).exp() * (T::one() - (-a2 * (T::one() - theta)).exp()) / a2;
    Ok(TwoThresholdExact {
        u2: u,
        theta,
        a1,
        a2,
        v_bar,
        implicit_residual: two_threshold_residual(theta, u),
        stationarity,
        dual: dual(theta, u, a1, a2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let s = two_threshold_exact::<f64>().unwrap();
        assert!((s.u2 - 1.316097).abs() < 1e-4, "{s:?}");
        assert!((s.theta - 0.603285).abs() < 1e-4);
        assert!((s.a1 - 0.517708).abs() < 1e-4);
        assert!((s.a2 - 2.316097).abs() < 1e-4);
        assert!((s.v_bar - 0.70804).abs() < 1e-4);
        assert!(s.implicit_residual.abs() < 1e-10);
        assert!(s.stationarity.abs() < 1e-6, "{}", s.stationarity);
    }

    #[test]
    fn dual_constants() {
        let s = two_threshold_exact::<f64>().unwrap();
        let d = &s.dual;
        assert!((d.a - 0.516213).abs() < 1e-4, "{d:?}");
        assert!((d.b - 0.567355).abs() < 1e-4);
        assert!((d.c - 0.255744).abs() < 1e-4);
        assert!((d.d1 - s.v_bar).abs() < 1e-4);
        assert!(d.system_residual < 1e-12);
    }

    #[test]
    fn algebraic_identities() {
        for &u in &[0.3, 1.0, 1.316097, 3.0] {
            let a1 = a1_of(u);
            let eu = (-u as f64).exp();
            assert!((a1 - (1.0 - u * eu / (1.0 - eu))).abs() < 1e-12);
            assert!((a2_of(u) - a1 - (u + u * eu / (1.0 - eu))).abs() < 1e-9);
        }
    }

    #[test]
    fn solver_is_well_posed_in_bracket() {
        for i in 0..=12 {
            let theta = THETA_LO + (THETA_HI - THETA_LO) * i as f64 / 12.0;
            let u = u_of_theta(theta).unwrap();
            assert!(u > U_LO && u < U_HI);
        }
    }

    #[test]
    fn linear_solve() {
        let m: [[f64; 3]; 3] = [[2.0, 1.0, 0.0], [0.0, 0.0, 3.0], [1.0, 4.0, 1.0]];
        let x = solve3(m, [3.0, 6.0, 7.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12 && (x[2] - 2.0).abs() < 1e-12);
    }
}
