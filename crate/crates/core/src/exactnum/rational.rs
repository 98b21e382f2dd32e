use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision reduced fraction with positive denominator.
///
/// Serializes as the string `"p/q"` (always with an explicit denominator).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

/// Builds `p/q` from machine integers. Panics when `q == 0`; use
/// [`Rational::new`] for fallible construction.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p, q).expect("ratio: zero denominator")
}

impl Rational {
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self> {
        let q = q.into();
        if q.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self(BigRational::new(p.into(), q)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self(self.0.recip()))
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// `x - floor(x)`, always in `[0, 1)`.
    pub fn fract(&self) -> Self {
        self - &Self::from_integer(self.floor())
    }

    pub fn pow(&self, exp: i32) -> Self {
        Self(num_traits::Pow::pow(&self.0, exp))
    }

    /// True when `0 <= self < 1`.
    pub fn in_unit_interval(&self) -> bool {
        !self.is_negative() && self.0 < BigRational::one()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }

    /// Truncated (toward zero) decimal rendering with `digits` fractional digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let neg = self.is_negative();
        let a = self.abs();
        let scale = BigInt::from(10u32).pow(digits as u32);
        let scaled = (a.numer() * &scale) / a.denom();
        let (int_part, frac_part) = scaled.div_rem(&scale);
        let mut s = String::new();
        if neg && !scaled.is_zero() {
            s.push('-');
        }
        s.push_str(&int_part.to_string());
        if digits > 0 {
            let frac = frac_part.to_string();
            s.push('.');
            s.extend(std::iter::repeat_n('0', digits - frac.len()));
            s.push_str(&frac);
        }
        s
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Self::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Self(r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `p/q`, integers, and decimal literals such as `0.11` or `-2.5`,
/// all parsed exactly.
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational literal: {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            return Self::new(p, q);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let (neg, int) = match int.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, int.strip_prefix('+').unwrap_or(int)),
            };
            if frac.is_empty() && int.is_empty() {
                return Err(bad());
            }
            if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let digits = format!("{int}{frac}");
            let mag: BigInt = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits.parse().map_err(|_| bad())?
            };
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let mag = if neg { -mag } else { mag };
            return Self::new(mag, scale);
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Self::from_integer(n))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

/// Smallest `m` with `q | base^m`, or `None` when `q` has a prime factor not
/// dividing `base` (or `m` would exceed `limit`).
pub(crate) fn terminating_length(q: &BigInt, base: u32, limit: usize) -> Option<usize> {
    let mut rest = q.abs();
    let b = BigInt::from(base);
    let mut m = 0;
    while !rest.is_one() {
        let g = rest.gcd(&b);
        if g.is_one() || m >= limit {
            return None;
        }
        rest /= g;
        m += 1;
    }
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_rational_normalizes() {
        assert_eq!(Rational::new(2, 4).unwrap().to_string(), "1/2");
        assert_eq!(Rational::new(-3, -9).unwrap().to_string(), "1/3");
        assert_eq!(Rational::new(0, 7).unwrap().to_string(), "0/1");
        assert_eq!(Rational::new(3, -6).unwrap().to_string(), "-1/2");
        assert_eq!(Rational::new(1, 0), Err(Error::ZeroDenominator));
    }

    #[test]
    fn parses_literals() {
        assert_eq!("0.11".parse::<Rational>().unwrap(), ratio(11, 100));
        assert_eq!("-2.5".parse::<Rational>().unwrap(), ratio(-5, 2));
        assert_eq!(".5".parse::<Rational>().unwrap(), ratio(1, 2));
        assert_eq!("13/15".parse::<Rational>().unwrap(), ratio(13, 15));
        assert_eq!("7".parse::<Rational>().unwrap(), ratio(7, 1));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert!("1.2.3".parse::<Rational>().is_err());
    }

    #[test]
    fn decimal_truncates() {
        assert_eq!(ratio(1, 4).to_decimal_string(4), "0.2500");
        assert_eq!(ratio(2, 3).to_decimal_string(3), "0.666");
        assert_eq!(ratio(-2, 3).to_decimal_string(2), "-0.66");
        assert_eq!(ratio(7, 2).to_decimal_string(0), "3");
    }

    #[test]
    fn fract_and_floor() {
        assert_eq!(ratio(4, 3).fract(), ratio(1, 3));
        assert_eq!(ratio(-1, 3).fract(), ratio(2, 3));
        assert_eq!(ratio(-1, 3).floor(), BigInt::from(-1));
    }

    #[test]
    fn terminating_lengths() {
        assert_eq!(terminating_length(&BigInt::from(4), 4, 100), Some(1));
        assert_eq!(terminating_length(&BigInt::from(8), 4, 100), Some(2));
        assert_eq!(terminating_length(&BigInt::from(1), 4, 100), Some(0));
        assert_eq!(terminating_length(&BigInt::from(3), 4, 100), None);
        assert_eq!(terminating_length(&BigInt::from(12), 6, 100), Some(2));
    }

    #[test]
    fn serde_as_string() {
        let r = ratio(-3, 8);
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(js, "\"-3/8\"");
        let back: Rational = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
    }
}
