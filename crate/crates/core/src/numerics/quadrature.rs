//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Panels are bisected in order of decreasing error estimate. Nodes never touch
//! the panel ends, so integrable endpoint singularities such as `-log y` at 0 are
//! handled by refinement alone.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadratureSpec<T> {
    /// `1e-10` in double precision; a few hundred ulps in single precision.
    fn default() -> Self {
        let tol = T::lit(1e-10).max(T::lit(128.0) * T::epsilon());
        Self {
            abs_tol: tol,
            rel_tol: tol,
            max_subdivisions: 1_000_000,
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn new(abs_tol: T, rel_tol: T, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > T::zero()) || !(self.rel_tol > T::zero()) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Value together with its error estimate and the work spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub subdivisions: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T: Real> Eq for Panel<T> {}

impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Panel<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut res_k = fc * T::lit(WGK[7]);
    let mut res_g = fc * T::lit(WG[3]);
    let mut res_abs = fc.abs() * T::lit(WGK[7]);
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half_len.abs();
    let value = res_k * half_len;
    res_abs = res_abs * abs_half;
    res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = if scale < T::one() { res_asc * scale } else { res_asc };
    }
    let floor = T::lit(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) && floor > err {
        err = floor;
    }
    Panel {
        a,
        b,
        value,
        error: err,
    }
}

/// Adaptive integral of `f` over `[a, b]` with the full error report.
pub fn integrate_detailed<T, F>(f: F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<Estimate<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    spec.validate()?;
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: T::zero(),
            subdivisions: 0,
        });
    }
    let first = kronrod(&f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;
    let half = T::lit(0.5);
    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                estimate: total.to_f64_lossy(),
                error: total_err.to_f64_lossy(),
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = half * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel cannot be split further in this precision.
            heap.push(worst);
            return Err(Error::Quadrature {
                estimate: total.to_f64_lossy(),
                error: total_err.to_f64_lossy(),
                subdivisions,
            });
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total = total - worst.value + left.value + right.value;
        total_err = total_err - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        if subdivisions % 64 == 0 {
            total = heap.iter().fold(T::zero(), |s, p| s + p.value);
            total_err = heap.iter().fold(T::zero(), |s, p| s + p.error);
        }
    }
    let value = heap.iter().fold(T::zero(), |s, p| s + p.value);
    let error = heap.iter().fold(T::zero(), |s, p| s + p.error);
    Ok(Estimate {
        value,
        error,
        subdivisions,
    })
}

pub fn integrate<T, F>(f: F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    integrate_detailed(f, a, b, spec).map(|e| e.value)
}

/// Sum of adaptive integrals over `[a, b]` cut at the interior `breaks`.
///
/// Useful when the integrand has structure on a scale much smaller than
/// `b - a`, which a single initial panel could sample right past.
pub fn integrate_piecewise<T, F>(f: F, a: T, b: T, breaks: &[T], spec: &QuadratureSpec<T>) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    let mut total = T::zero();
    let mut lo = a;
    for &x in breaks.iter().filter(|&&x| x > a && x < b) {
        if x > lo {
            total = total + integrate(&f, lo, x, spec)?;
            lo = x;
        }
    }
    Ok(total + integrate(&f, lo, b, spec)?)
}

/// `scale * 2^j` for `j = 0, 1, ...` while below `limit`.
pub fn geometric_breaks<T: Real>(scale: T, limit: T) -> Vec<T> {
    let mut out = Vec::new();
    let mut x = scale;
    while x < limit {
        out.push(x);
        x = x * T::lit(2.0);
    }
    out
}

/// Integral of `g(y)` over `[a, b]` after the change of variable `y = x^p`.
///
/// The callback receives both `x` and `y = x^p` so callers can evaluate the
/// integrand in whichever variable is better conditioned. The Jacobian
/// `p x^(p-1)` is applied here.
pub fn integrate_with_substitution<T, F>(
    g: F,
    p: T,
    a: T,
    b: T,
    spec: &QuadratureSpec<T>,
) -> Result<T>
where
    T: Real,
    F: Fn(T, T) -> T,
{
    if !(p > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "substitution power must be positive, got {p}"
        )));
    }
    if !(a >= T::zero()) {
        return Err(Error::InvalidParameter(
            "power substitution needs a nonnegative lower bound".into(),
        ));
    }
    let inv = p.recip();
    let xa = a.powf(inv);
    let xb = b.powf(inv);
    integrate(
        |x: T| {
            let y = x.powf(p);
            g(x, y) * p * x.powf(p - T::one())
        },
        xa,
        xb,
        spec,
    )
}
