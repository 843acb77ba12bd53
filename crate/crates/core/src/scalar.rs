//! Scalar abstraction shared by the free-space solvers and the affine actions.
//!
//! Every verification in this crate is meant to run over an exact field
//! ([`crate::Rational`]); the float implementations exist for quick
//! exploration and use a small absolute tolerance in place of exact zero
//! tests.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Whether arithmetic on this type is exact.
    const EXACT: bool;

    /// Zero test used by pivoting and canonicalization.
    fn negligible(&self) -> bool;

    /// `num / den`; `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::ratio(n, 1)
    }

    /// Strictly positive beyond the zero tolerance.
    fn strictly_positive(&self) -> bool {
        !self.negligible() && *self > Self::zero()
    }

    fn pow_u32(&self, p: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..p {
            acc = acc * self.clone();
        }
        acc
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Lossless text form: `p/q` (or `p`) for rationals.
    fn to_exact_string(&self) -> String {
        self.to_string()
    }

    /// Inverse of [`Scalar::to_exact_string`]; also accepts integers and decimals.
    fn parse_exact(s: &str) -> Option<Self>;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

fn parse_ratio_parts(s: &str) -> Option<(BigInt, BigInt)> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some((n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let negative = int.trim_start().starts_with('-');
        let int_part = BigInt::from_str(if int == "-" || int.is_empty() { "0" } else { int }).ok()?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigInt::from_str(frac).ok()?;
        let mut num = int_part.abs() * &scale + frac_part;
        if negative {
            num = -num;
        }
        return Some((num, scale));
    }
    Some((BigInt::from_str(s).ok()?, BigInt::one()))
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn negligible(&self) -> bool {
        self.is_zero()
    }

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_exact(s: &str) -> Option<Self> {
        let (n, d) = parse_ratio_parts(s)?;
        Some(BigRational::new(n, d))
    }
}

impl Scalar for Ratio<i64> {
    const EXACT: bool = true;

    fn negligible(&self) -> bool {
        self.is_zero()
    }

    fn ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn parse_exact(s: &str) -> Option<Self> {
        let (n, d) = parse_ratio_parts(s)?;
        Some(Ratio::new(n.to_i64()?, d.to_i64()?))
    }
}

macro_rules! float_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn negligible(&self) -> bool {
                self.abs() <= $eps
            }

            fn ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn parse_exact(s: &str) -> Option<Self> {
                let (n, d) = parse_ratio_parts(s)?;
                Some((n.to_f64()? / d.to_f64()?) as $t)
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-4);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn exact_round_trip() {
        let q = Rational::ratio(-6, 4);
        assert_eq!(q.to_exact_string(), "-3/2");
        assert_eq!(Rational::parse_exact("-3/2"), Some(q));
        assert_eq!(Rational::parse_exact("7"), Some(Rational::from_int(7)));
        assert_eq!(Rational::parse_exact("-0.25"), Some(Rational::ratio(-1, 4)));
        assert_eq!(Rational::parse_exact("1/0"), None);
        assert_eq!(Rational::parse_exact("x"), None);
    }

    #[test]
    fn small_ratio_and_floats() {
        assert_eq!(Ratio::<i64>::parse_exact("4/6"), Some(Ratio::new(2, 3)));
        assert!((f64::parse_exact("1/3").unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(1e-12f64.negligible());
        assert!(!Rational::ratio(1, 1_000_000_000).negligible());
    }

    #[test]
    fn powers() {
        assert_eq!(Rational::ratio(2, 3).pow_u32(3), Rational::ratio(8, 27));
        assert_eq!(Rational::from_int(5).pow_u32(0), Rational::one());
    }
}
