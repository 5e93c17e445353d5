//! Continuous input distributions on the nonnegative reals.
//!
//! Policies only ever need `P(X >= x) = q` inverted, so every distribution
//! exposes [`Distribution::upper_quantile`] alongside the usual CDF and
//! quantile. Sampling is by inverse transform, which makes realised values
//! equivariant under [`Distribution::scaled`] for a fixed random stream.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, uniform, QuadratureSpec};

/// `{name, params}` record used in reports and on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedDiscrete {
    /// `(value, probability)` pairs.
    pub atoms: Vec<(f64, f64)>,
    /// Width of the uniform noise placed around each atom.
    pub eps: f64,
}

/// Piecewise linear CDF obtained by spreading each atom uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed {
    source: SmoothedDiscrete,
    pieces: Vec<(f64, f64, f64)>,
    knots: Vec<f64>,
    knot_cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform01,
    Exponential { rate: f64 },
    /// Lomax law `1 - (1 + x)^-shape` conditioned on `[0, cap]`.
    BoundedPareto { shape: f64, cap: f64 },
    Smoothed(Smoothed),
    Scaled { inner: Box<Distribution>, factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Builtin {
    Uniform01,
    Exponential { rate: f64 },
    BoundedPareto { shape: f64, cap: f64 },
}

pub fn builtin(name: Builtin) -> Result<Distribution> {
    match name {
        Builtin::Uniform01 => Ok(Distribution::Uniform01),
        Builtin::Exponential { rate } => Distribution::exponential(rate),
        Builtin::BoundedPareto { shape, cap } => Distribution::bounded_pareto(shape, cap),
    }
}

pub fn smooth(d: &SmoothedDiscrete) -> Result<Distribution> {
    Smoothed::new(d.clone()).map(Distribution::Smoothed)
}

impl Smoothed {
    pub fn new(source: SmoothedDiscrete) -> Result<Self> {
        if !(source.eps > 0.0) || !source.eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise width must be positive, got {}",
                source.eps
            )));
        }
        if source.atoms.is_empty() {
            return Err(Error::InvalidParameter("no atoms".into()));
        }
        let mut total = 0.0;
        for &(v, p) in &source.atoms {
            if !(p > 0.0) || !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "atom ({v}, {p}) needs a nonnegative value and positive mass"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        let half = 0.5 * source.eps;
        let pieces: Vec<(f64, f64, f64)> = source
            .atoms
            .iter()
            .map(|&(v, p)| ((v - half).max(0.0), v + half, p / total))
            .collect();
        let mut knots: Vec<f64> = pieces.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut s = Self {
            source,
            pieces,
            knots: Vec::new(),
            knot_cdf: Vec::new(),
        };
        s.knot_cdf = knots.iter().map(|&x| s.cdf_raw(x)).collect();
        s.knots = knots;
        Ok(s)
    }

    fn cdf_raw(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|&(a, b, p)| p * ((x - a) / (b - a)).clamp(0.0, 1.0))
            .sum::<f64>()
            .min(1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        let j = self.knot_cdf.partition_point(|&c| c < u);
        if j == 0 {
            return self.knots[0];
        }
        if j >= self.knots.len() {
            return *self.knots.last().expect("at least two knots");
        }
        let (x0, x1) = (self.knots[j - 1], self.knots[j]);
        let (c0, c1) = (self.knot_cdf[j - 1], self.knot_cdf[j]);
        x0 + (x1 - x0) * (u - c0) / (c1 - c0)
    }

    pub fn source(&self) -> &SmoothedDiscrete {
        &self.source
    }
}

impl Distribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {rate}")));
        }
        Ok(Distribution::Exponential { rate })
    }

    pub fn bounded_pareto(shape: f64, cap: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() || !(cap > 0.0) || !cap.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bounded-pareto needs shape > 0 and cap > 0, got ({shape}, {cap})"
            )));
        }
        Ok(Distribution::BoundedPareto { shape, cap })
    }

    /// Law of `factor * X`.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Distribution::Scaled {
            inner: Box::new(self),
            factor,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Distribution::Uniform01 => x.min(1.0),
            Distribution::Exponential { rate } => -(-rate * x).exp_m1(),
            Distribution::BoundedPareto { shape, cap } => {
                if x >= *cap {
                    1.0
                } else {
                    (-shape * x.ln_1p()).exp_m1() / (-shape * cap.ln_1p()).exp_m1()
                }
            }
            Distribution::Smoothed(s) => s.cdf_raw(x),
            Distribution::Scaled { inner, factor } => inner.cdf(x / factor),
        }
    }

    /// `inf { x : cdf(x) >= u }` for `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform01 => u,
            Distribution::Exponential { rate } => -(-u).ln_1p() / rate,
            Distribution::BoundedPareto { shape, cap } => {
                let z = -(-shape * cap.ln_1p()).exp_m1();
                ((-u * z).ln_1p() / -shape).exp_m1()
            }
            Distribution::Smoothed(s) => s.quantile(u),
            Distribution::Scaled { inner, factor } => factor * inner.quantile(u),
        }
    }

    /// `quantile(1 - q)`, evaluated without forming `1 - q` where possible.
    pub fn upper_quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform01 => 1.0 - q,
            Distribution::Exponential { rate } => -q.ln() / rate,
            Distribution::BoundedPareto { shape, cap } => {
                let tail = (-shape * cap.ln_1p()).exp();
                let z = 1.0 - tail;
                ((tail + q * z).ln() / -shape).exp_m1().clamp(0.0, *cap)
            }
            Distribution::Smoothed(s) => s.quantile(1.0 - q),
            Distribution::Scaled { inner, factor } => factor * inner.upper_quantile(q),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(uniform(rng))
    }

    pub fn descriptor(&self) -> Descriptor {
        let mut params = BTreeMap::new();
        let name = match self {
            Distribution::Uniform01 => "uniform01".to_string(),
            Distribution::Exponential { rate } => {
                params.insert("rate".into(), *rate);
                "exponential".into()
            }
            Distribution::BoundedPareto { shape, cap } => {
                params.insert("shape".into(), *shape);
                params.insert("cap".into(), *cap);
                "bounded-pareto".into()
            }
            Distribution::Smoothed(s) => {
                params.insert("eps".into(), s.source.eps);
                for (i, &(v, p)) in s.source.atoms.iter().enumerate() {
                    params.insert(format!("atom{i}.value"), v);
                    params.insert(format!("atom{i}.prob"), p);
                }
                "smoothed-discrete".into()
            }
            Distribution::Scaled { inner, factor } => {
                let d = inner.descriptor();
                params = d.params;
                params.insert("scale".into(), *factor);
                format!("scaled-{}", d.name)
            }
        };
        Descriptor { name, params }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform01 => write!(f, "uniform01"),
            Distribution::Exponential { rate } => write!(f, "exponential:{rate}"),
            Distribution::BoundedPareto { shape, cap } => write!(f, "bounded-pareto:{shape},{cap}"),
            Distribution::Smoothed(_) => write!(f, "smoothed-discrete"),
            Distribution::Scaled { inner, factor } => write!(f, "{factor}*{inner}"),
        }
    }
}

/// Parses `uniform01`, `exponential:RATE` and `bounded-pareto:SHAPE,CAP`.
impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!("bad number {t:?} in distribution {s:?}"))
                    })
                })
                .collect::<Result<_>>()?
        };
        match (name, nums.as_slice()) {
            ("uniform01", []) => Ok(Distribution::Uniform01),
            ("exponential", []) => Distribution::exponential(1.0),
            ("exponential", [rate]) => Distribution::exponential(*rate),
            ("bounded-pareto", [shape, cap]) => Distribution::bounded_pareto(*shape, *cap),
            _ => Err(Error::InvalidParameter(format!("unknown distribution {s:?}"))),
        }
    }
}

/// Threshold `x` with `P(X >= x) = q`. `q = 0` maps to `+inf`, which never accepts.
pub fn threshold_from_quantile(d: &Distribution, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile {q} outside [0, 1]")));
    }
    if q == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(d.upper_quantile(q))
}

/// `E[max(X_1..X_n)]` as `int_0^1 Q(1 - u) n (1 - u)^(n-1) du`, integrated after
/// the change of variable `w = 1 - (1 - u)^n` which absorbs the weight.
pub fn prophet_value_exact(d: &Distribution, n: usize, spec: &QuadratureSpec<f64>) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nf = n as f64;
    integrate(
        |w: f64| {
            // u = 1 - (1 - w)^(1/n)
            let u = -((-w).ln_1p() / nf).exp_m1();
            d.upper_quantile(u)
        },
        0.0,
        1.0,
        spec,
    )
}

/// Monte Carlo estimate of `E[max]` with its standard error.
pub fn prophet_value_monte_carlo<R: Rng + ?Sized>(
    d: &Distribution,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..trials {
        let m = (0..n).map(|_| d.sample(rng)).fold(0.0, f64::max);
        sum += m;
        sq += m * m;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = ((sq / t - mean * mean) * t / (t - 1.0)).max(0.0);
    (mean, (var / t).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    fn spec() -> QuadratureSpec<f64> {
        QuadratureSpec::default()
    }

    #[test]
    fn builtin_quantiles() {
        assert_eq!(Distribution::Uniform01.quantile(0.25), 0.25);
        let e = Distribution::exponential(1.0).unwrap();
        assert!((e.quantile(1.0 - (-1f64).exp()) - 1.0).abs() < 1e-12);
        let p = builtin(Builtin::BoundedPareto { shape: 2.0, cap: 100.0 }).unwrap();
        assert!((p.cdf(p.quantile(0.9)) - 0.9).abs() < 1e-9);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Distribution::exponential(0.0).is_err());
        assert!(Distribution::bounded_pareto(-1.0, 10.0).is_err());
        assert!(Distribution::bounded_pareto(2.0, 0.0).is_err());
        assert!("weibull:1".parse::<Distribution>().is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["uniform01", "exponential:1", "bounded-pareto:2,100"] {
            let d: Distribution = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
    }

    #[test]
    fn thresholds() {
        let u = Distribution::Uniform01;
        assert!((threshold_from_quantile(&u, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((threshold_from_quantile(&u, 0.01).unwrap() - 0.99).abs() < 1e-15);
        let e = Distribution::exponential(1.0).unwrap();
        assert!((threshold_from_quantile(&e, (-1f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(threshold_from_quantile(&e, 0.0).unwrap(), f64::INFINITY);
        assert!(threshold_from_quantile(&e, 1.5).is_err());
    }

    #[test]
    fn upper_quantile_agrees_with_quantile() {
        let ds = [
            Distribution::Uniform01,
            Distribution::exponential(2.5).unwrap(),
            Distribution::bounded_pareto(2.0, 100.0).unwrap(),
            Distribution::bounded_pareto(0.5, 3.0).unwrap(),
        ];
        for d in &ds {
            for &q in &[0.9, 0.5, 0.1, 1e-3] {
                let a = d.upper_quantile(q);
                let b = d.quantile(1.0 - q);
                assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{d}: {a} vs {b}");
                assert!((1.0 - d.cdf(a) - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prophet_values() {
        let u = Distribution::Uniform01;
        assert!((prophet_value_exact(&u, 1, &spec()).unwrap() - 0.5).abs() < 1e-9);
        assert!((prophet_value_exact(&u, 2, &spec()).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        let e = Distribution::exponential(1.0).unwrap();
        let h3 = 1.0 + 0.5 + 1.0 / 3.0;
        assert!((prophet_value_exact(&e, 3, &spec()).unwrap() - h3).abs() < 1e-8);
    }

    #[test]
    fn smoothed_single_atom() {
        let d = smooth(&SmoothedDiscrete {
            atoms: vec![(1.0, 1.0)],
            eps: 1e-6,
        })
        .unwrap();
        assert_eq!(d.cdf(1.0 - 1e-6), 0.0);
        assert!((d.cdf(1.0) - 0.5).abs() < 1e-9);
        assert_eq!(d.cdf(1.0 + 1e-6), 1.0);
        assert!(d.cdf(1.0 + 1e-7) > d.cdf(1.0));
        let pv = prophet_value_exact(&d, 5, &spec()).unwrap();
        assert!((pv - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn smoothed_two_atoms() {
        let d = smooth(&SmoothedDiscrete {
            atoms: vec![(0.0, 0.5), (1.0, 0.5)],
            eps: 1e-3,
        })
        .unwrap();
        let x = d.quantile(0.75);
        assert!(x > 1.0 - 1e-3 && x < 1.0 + 1e-3, "{x}");
        assert!((d.cdf(x) - 0.75).abs() < 1e-9);
        // Flat region between the atoms: quantile picks the left end.
        assert!((d.quantile(0.5) - 5e-4).abs() < 1e-12);
    }

    #[test]
    fn smoothing_rejects_bad_input() {
        let bad_eps = SmoothedDiscrete { atoms: vec![(1.0, 1.0)], eps: 0.0 };
        assert!(smooth(&bad_eps).is_err());
        let bad_mass = SmoothedDiscrete { atoms: vec![(1.0, 0.4)], eps: 0.1 };
        assert!(smooth(&bad_mass).is_err());
    }

    #[test]
    fn scaled_prophet_value() {
        let e = Distribution::exponential(1.0).unwrap();
        let base = prophet_value_exact(&e, 10, &spec()).unwrap();
        let s = e.scaled(3.0).unwrap();
        let scaled = prophet_value_exact(&s, 10, &spec()).unwrap();
        assert!((scaled - 3.0 * base).abs() < 1e-8);
        assert_eq!(s.descriptor().params["scale"], 3.0);
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let d = Distribution::bounded_pareto(2.0, 100.0).unwrap();
        let exact = prophet_value_exact(&d, 5, &spec()).unwrap();
        let mut rng = seeded_rng(3);
        let (mean, se) = prophet_value_monte_carlo(&d, 5, 100_000, &mut rng);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }
}
