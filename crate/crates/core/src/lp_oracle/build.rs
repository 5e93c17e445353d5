//! Discretised window LPs on the quantile grid `i/m`.
//!
//! `D` minimises `d_1` over step values `d_t` and a nonincreasing inverse CDF
//! sampled as `f_0..f_m`:
//!
//! ```text
//! d_t - c_{t,i} (1/m) sum_{l<=i} f_l - p_{t,i} d_{t+1} >= 0        t = 1..k, i = 1..m
//! sum_l (n/m) (1 - l/m)^(n-1) f_l = 1
//! f_{l-1} - f_l >= 0                                               l = 1..m
//! c_{t,i} = (1 - (1-i/m)^tau_t) / (i/m),  p_{t,i} = (1-i/m)^tau_t,  d_{k+1} = 0
//! ```
//!
//! `P` is its LP dual, maximising `v` over `alpha_{t,i}`, `v` and `eta_0..eta_{m+1}`.
//! All variables are nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_model::WindowPlan;
use crate::scalar::LpScalar;

pub const MAX_M: usize = 500;
pub const MAX_KM: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    MinimizeD,
    MaximizeP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<S> {
    pub label: String,
    pub coeffs: Vec<S>,
    pub sense: Sense,
    pub rhs: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedLP<S> {
    pub orientation: Orientation,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub tau: Vec<usize>,
    pub labels: Vec<String>,
    pub objective: Vec<S>,
    pub rows: Vec<Row<S>>,
}

impl<S: LpScalar> DiscretizedLP<S> {
    pub fn num_vars(&self) -> usize {
        self.labels.len()
    }

    /// `+1` for maximisation, `-1` for minimisation.
    pub fn maximize(&self) -> bool {
        self.orientation == Orientation::MaximizeP
    }

    pub fn objective_value(&self, x: &[S]) -> S {
        dot(&self.objective, x)
    }

    /// Largest violation of a row or of `x >= 0`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for xi in x {
            if *xi < S::zero() {
                worst = max(worst, -xi.clone());
            }
        }
        for r in &self.rows {
            let lhs = dot(&r.coeffs, x);
            let gap = lhs - r.rhs.clone();
            let viol = match r.sense {
                Sense::Le => gap,
                Sense::Ge => -gap,
                Sense::Eq => gap.abs(),
            };
            worst = max(worst, viol);
        }
        worst
    }
}

pub(crate) fn dot<S: LpScalar>(a: &[S], x: &[S]) -> S {
    a.iter()
        .zip(x)
        .filter(|(c, _)| !c.is_zero())
        .fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
}

pub(crate) fn max<S: LpScalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

fn check(n: usize, k: usize, m: usize, plan: &WindowPlan) -> Result<()> {
    if plan.n != n || plan.k != k {
        return Err(Error::InvalidParameter(format!(
            "plan {:?} does not describe n={n}, k={k}",
            plan.tau
        )));
    }
    if m < k {
        return Err(Error::InvalidParameter(format!("need m >= k, got m={m}, k={k}")));
    }
    if m > MAX_M || k * m > MAX_KM {
        return Err(Error::SizeLimit(format!(
            "m={m}, k*m={} exceeds the caps m <= {MAX_M}, k*m <= {MAX_KM}",
            k * m
        )));
    }
    Ok(())
}

struct Coefficients<S> {
    /// `c[t][i]` for `i = 1..m` stored at `i - 1`.
    c: Vec<Vec<S>>,
    p: Vec<Vec<S>>,
    /// `(n/m) (1 - l/m)^(n-1)` for `l = 0..m`.
    w: Vec<S>,
}

fn coefficients<S: LpScalar>(n: usize, m: usize, plan: &WindowPlan) -> Coefficients<S> {
    let mut c = Vec::with_capacity(plan.k);
    let mut p = Vec::with_capacity(plan.k);
    for &tau in &plan.tau {
        let pt: Vec<S> = (1..=m).map(|i| S::pow_one_minus_ratio(i, m, tau)).collect();
        let ct: Vec<S> = (1..=m)
            .zip(&pt)
            .map(|(i, pw)| (S::one() - pw.clone()) / S::ratio(i, m))
            .collect();
        c.push(ct);
        p.push(pt);
    }
    let w = (0..=m)
        .map(|l| S::ratio(n, m) * S::pow_one_minus_ratio(l, m, n - 1))
        .collect();
    Coefficients { c, p, w }
}

/// The minimisation `D` over `d_1..d_k, f_0..f_m`.
#[allow(non_snake_case)]
pub fn build_D<S: LpScalar>(n: usize, k: usize, m: usize, plan: &WindowPlan) -> Result<DiscretizedLP<S>> {
    check(n, k, m, plan)?;
    let co = coefficients::<S>(n, m, plan);
    let nv = k + m + 1;
    let d = |t: usize| t - 1;
    let f = |l: usize| k + l;
    let mut labels: Vec<String> = (1..=k).map(|t| format!("d{t}")).collect();
    labels.extend((0..=m).map(|l| format!("f{l}")));
    let mut objective = vec![S::zero(); nv];
    objective[d(1)] = S::one();
    let inv_m = S::ratio(1, m);
    let mut rows = Vec::with_capacity(k * m + 1 + m);
    for t in 1..=k {
        for i in 1..=m {
            let mut coeffs = vec![S::zero(); nv];
            coeffs[d(t)] = S::one();
            let ci = co.c[t - 1][i - 1].clone() * inv_m.clone();
            for l in 0..=i {
                coeffs[f(l)] = -ci.clone();
            }
            if t < k {
                coeffs[d(t + 1)] = -co.p[t - 1][i - 1].clone();
            }
            rows.push(Row {
                label: format!("window_{t}_{i}"),
                coeffs,
                sense: Sense::Ge,
                rhs: S::zero(),
            });
        }
    }
    let mut coeffs = vec![S::zero(); nv];
    for l in 0..=m {
        coeffs[f(l)] = co.w[l].clone();
    }
    rows.push(Row {
        label: "prophet".into(),
        coeffs,
        sense: Sense::Eq,
        rhs: S::one(),
    });
    for l in 1..=m {
        let mut coeffs = vec![S::zero(); nv];
        coeffs[f(l - 1)] = S::one();
        coeffs[f(l)] = -S::one();
        rows.push(Row {
            label: format!("monotone_{l}"),
            coeffs,
            sense: Sense::Ge,
            rhs: S::zero(),
        });
    }
    Ok(DiscretizedLP {
        orientation: Orientation::MinimizeD,
        n,
        k,
        m,
        tau: plan.tau.clone(),
        labels,
        objective,
        rows,
    })
}

/// The maximisation `P` over `alpha_{t,i}, v, eta_0..eta_{m+1}`.
#[allow(non_snake_case)]
pub fn build_P<S: LpScalar>(n: usize, k: usize, m: usize, plan: &WindowPlan) -> Result<DiscretizedLP<S>> {
    check(n, k, m, plan)?;
    let co = coefficients::<S>(n, m, plan);
    let nv = k * m + 1 + m + 2;
    let alpha = |t: usize, i: usize| (t - 1) * m + (i - 1);
    let v = k * m;
    let eta = |l: usize| k * m + 1 + l;
    let mut labels = Vec::with_capacity(nv);
    for t in 1..=k {
        labels.extend((1..=m).map(|i| format!("alpha_{t}_{i}")));
    }
    labels.push("v".into());
    labels.extend((0..=m + 1).map(|l| format!("eta{l}")));
    let mut objective = vec![S::zero(); nv];
    objective[v] = S::one();
    let inv_m = S::ratio(1, m);
    let mut rows = Vec::new();
    let mut coeffs = vec![S::zero(); nv];
    for i in 1..=m {
        coeffs[alpha(1, i)] = S::one();
    }
    rows.push(Row {
        label: "budget_1".into(),
        coeffs,
        sense: Sense::Le,
        rhs: S::one(),
    });
    for t in 1..k {
        let mut coeffs = vec![S::zero(); nv];
        for i in 1..=m {
            coeffs[alpha(t + 1, i)] = S::one();
            coeffs[alpha(t, i)] = -co.p[t - 1][i - 1].clone();
        }
        rows.push(Row {
            label: format!("budget_{}", t + 1),
            coeffs,
            sense: Sense::Le,
            rhs: S::zero(),
        });
    }
    for l in 0..=m {
        let mut coeffs = vec![S::zero(); nv];
        coeffs[v] = co.w[l].clone();
        coeffs[eta(l + 1)] = S::one();
        coeffs[eta(l)] = -S::one();
        for t in 1..=k {
            for i in l.max(1)..=m {
                coeffs[alpha(t, i)] = -co.c[t - 1][i - 1].clone() * inv_m.clone();
            }
        }
        rows.push(Row {
            label: format!("quantile_{l}"),
            coeffs,
            sense: Sense::Le,
            rhs: S::zero(),
        });
    }
    for l in [0, m + 1] {
        let mut coeffs = vec![S::zero(); nv];
        coeffs[eta(l)] = S::one();
        rows.push(Row {
            label: format!("boundary_eta{l}"),
            coeffs,
            sense: Sense::Eq,
            rhs: S::zero(),
        });
    }
    Ok(DiscretizedLP {
        orientation: Orientation::MaximizeP,
        n,
        k,
        m,
        tau: plan.tau.clone(),
        labels,
        objective,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        for (n, k, m) in [(1, 1, 10), (6, 2, 7), (9, 3, 12)] {
            let plan = WindowPlan::equal(n.max(k), k).unwrap();
            let d = build_D::<f64>(plan.n, k, m, &plan).unwrap();
            assert_eq!(d.rows.len(), k * m + 1 + m);
            assert_eq!(d.num_vars(), k + m + 1);
            let p = build_P::<f64>(plan.n, k, m, &plan).unwrap();
            assert_eq!(p.num_vars(), k * m + 1 + m + 2);
            assert_eq!(p.rows.len(), 1 + (k - 1) + (m + 1) + 2);
        }
    }

    #[test]
    fn caps() {
        let plan = WindowPlan::equal(4, 1).unwrap();
        assert!(matches!(build_D::<f64>(4, 1, 501, &plan), Err(Error::SizeLimit(_))));
        let plan = WindowPlan::equal(10, 5).unwrap();
        assert!(matches!(build_P::<f64>(10, 5, 401, &plan), Err(Error::SizeLimit(_))));
        assert!(build_D::<f64>(10, 5, 4, &plan).is_err());
        assert!(build_D::<f64>(11, 5, 40, &plan).is_err());
    }
}
