use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating point scalar used by the continuous solvers: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Literal conversion; every constant used in this crate is representable.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        NumCast::from(self).unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to every Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x (1 - log x)` with its limit 0 at `x = 0`.
pub fn x_one_minus_log<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * (T::one() - x.ln())
    }
}

/// `(1 - q)^e` evaluated as `exp(e * ln(1 - q))` so that large exponents do not underflow early.
pub fn pow_one_minus<T: Real>(q: T, e: T) -> T {
    if q >= T::one() {
        if e == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        (e * (-q).ln_1p()).exp()
    }
}

/// Ordered field used by the LP oracle: `f64`, or `BigRational` for exact solves.
pub trait LpScalar:
    Clone
    + PartialOrd
    + Debug
    + Display
    + num_traits::Num
    + num_traits::Signed
    + num_traits::FromPrimitive
    + Send
    + Sync
    + 'static
{
    /// Zero test threshold for pivots and reduced costs.
    fn tolerance() -> Self;

    fn ratio(num: usize, den: usize) -> Self;

    /// `(1 - i/m)^e` with `0^0 = 1`.
    fn pow_one_minus_ratio(i: usize, m: usize, e: usize) -> Self;

    fn to_f64_lossy(&self) -> f64;
}

impl LpScalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn ratio(num: usize, den: usize) -> Self {
        num as f64 / den as f64
    }

    fn pow_one_minus_ratio(i: usize, m: usize, e: usize) -> Self {
        pow_one_minus(i as f64 / m as f64, e as f64)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl LpScalar for num_rational::BigRational {
    fn tolerance() -> Self {
        num_traits::Zero::zero()
    }

    fn ratio(num: usize, den: usize) -> Self {
        num_rational::BigRational::new(num.into(), den.into())
    }

    fn pow_one_minus_ratio(i: usize, m: usize, e: usize) -> Self {
        let base = Self::ratio(m - i, m);
        num_traits::pow::pow(base, e)
    }

    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn zero_to_the_zero() {
        assert_eq!(pow_one_minus(1.0f64, 0.0), 1.0);
        assert_eq!(f64::pow_one_minus_ratio(4, 4, 0), 1.0);
        assert_eq!(BigRational::pow_one_minus_ratio(4, 4, 0), BigRational::ratio(1, 1));
        assert_eq!(BigRational::pow_one_minus_ratio(1, 4, 2), BigRational::ratio(9, 16));
    }

    #[test]
    fn x_log_limit() {
        assert_eq!(x_one_minus_log(0.0f64), 0.0);
        assert!((x_one_minus_log(1.0f64) - 1.0).abs() < 1e-15);
    }
}
