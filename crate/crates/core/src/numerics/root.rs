//! Bracketed bisection for monotone functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of<T: Real>(x: T) -> Self {
        if x > T::zero() {
            Sign::Positive
        } else if x < T::zero() {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

/// An interval known to contain a sign change of some function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootBracket<T> {
    pub lo: T,
    pub hi: T,
    pub f_lo_sign: Sign,
    pub f_hi_sign: Sign,
}

impl<T: Real> RootBracket<T> {
    /// Evaluates `g` at both ends and keeps the bracket only if the signs differ.
    pub fn probe<F: Fn(T) -> T>(g: &F, lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "bracket needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        let bracket = Self {
            lo,
            hi,
            f_lo_sign: Sign::of(g(lo)),
            f_hi_sign: Sign::of(g(hi)),
        };
        bracket.check()?;
        Ok(bracket)
    }

    fn check(&self) -> Result<()> {
        if self.f_lo_sign == self.f_hi_sign && self.f_lo_sign != Sign::Zero {
            return Err(Error::BracketInvalid {
                lo: self.lo.to_f64_lossy(),
                hi: self.hi.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// Bisection until the bracket is no wider than `tol`; returns its midpoint.
pub fn find_root_monotone<T, F>(g: F, bracket: RootBracket<T>, tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    bracket.check()?;
    if bracket.f_lo_sign == Sign::Zero {
        return Ok(bracket.lo);
    }
    if bracket.f_hi_sign == Sign::Zero {
        return Ok(bracket.hi);
    }
    let lo_sign = bracket.f_lo_sign;
    let pred = |x: T| {
        let s = Sign::of(g(x));
        if s == Sign::Zero {
            None
        } else {
            Some(s == lo_sign)
        }
    };
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let half = T::lit(0.5);
    while hi - lo > tol {
        let mid = lo + half * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        match pred(mid) {
            None => return Ok(mid),
            Some(true) => lo = mid,
            Some(false) => hi = mid,
        }
    }
    Ok(lo + half * (hi - lo))
}

/// Locates the switch point of a monotone predicate with `holds(lo)` true and
/// `holds(hi)` false. Returns the final `(lo, hi)` pair, `hi - lo <= tol`.
pub fn bisect_predicate<T, P>(mut holds: P, lo: T, hi: T, tol: T) -> Result<(T, T)>
where
    T: Real,
    P: FnMut(T) -> Result<bool>,
{
    if !(lo < hi) || !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "bad predicate bracket [{lo}, {hi}] with tol {tol}"
        )));
    }
    if !holds(lo)? || holds(hi)? {
        return Err(Error::BracketInvalid {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    let half = T::lit(0.5);
    while hi - lo > tol {
        let mid = lo + half * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}
