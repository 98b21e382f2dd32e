use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;

use super::{DigitStream, Rational};
use crate::error::{Error, Result};

/// Default digit budget for [`compare`].
pub const DEFAULT_COMPARE_DIGITS: usize = 2_000;

/// A point that is either an exact rational or a digit stream in `[0, 1]`.
#[derive(Clone, Debug)]
pub enum RealValue {
    Rational(Rational),
    Stream(DigitStream),
}

impl RealValue {
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            RealValue::Rational(r) => Some(r),
            RealValue::Stream(_) => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, RealValue::Rational(_))
    }

    /// Rational bounds `lo <= x <= hi` with `hi - lo <= base^-digits` for
    /// streams; both bounds equal `x` for rationals.
    pub fn enclosure(&self, digits: usize) -> (Rational, Rational) {
        match self {
            RealValue::Rational(r) => (r.clone(), r.clone()),
            RealValue::Stream(s) => {
                let lo = s.prefix_value(digits);
                let width = Rational::new(1, BigInt::from(s.base()).pow(digits as u32))
                    .expect("positive power");
                let hi = &lo + &width;
                (lo, hi)
            }
        }
    }

    /// Human-readable name: `p/q` for rationals, the generator name for streams.
    pub fn label(&self) -> String {
        match self {
            RealValue::Rational(r) => r.to_string(),
            RealValue::Stream(s) => s.name(),
        }
    }
}

impl From<Rational> for RealValue {
    fn from(r: Rational) -> Self {
        RealValue::Rational(r)
    }
}

impl From<DigitStream> for RealValue {
    fn from(s: DigitStream) -> Self {
        RealValue::Stream(s)
    }
}

impl fmt::Display for RealValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn undecidable(digits: usize, a: &RealValue, b: &RealValue) -> Error {
    Error::Undecidable {
        digits,
        context: format!("comparing {a} with {b}"),
    }
}

/// Exact comparison of two values, scanning at most `max_digits` digits.
///
/// Two streams are reported `Equal` only when they are the same object;
/// otherwise a run of `max_digits` identical digits is `Undecidable`.
pub fn compare(a: &RealValue, b: &RealValue, max_digits: usize) -> Result<Ordering> {
    match (a, b) {
        (RealValue::Rational(x), RealValue::Rational(y)) => Ok(x.cmp(y)),
        (RealValue::Stream(s), RealValue::Rational(r)) => compare_stream_rational(s, r, max_digits)
            .ok_or_else(|| undecidable(max_digits, a, b)),
        (RealValue::Rational(r), RealValue::Stream(s)) => compare_stream_rational(s, r, max_digits)
            .map(Ordering::reverse)
            .ok_or_else(|| undecidable(max_digits, a, b)),
        (RealValue::Stream(s), RealValue::Stream(t)) => {
            if s.same_object(t) {
                return Ok(Ordering::Equal);
            }
            let found = if s.base() == t.base() {
                (0..max_digits).find_map(|i| match s.digit(i).cmp(&t.digit(i)) {
                    Ordering::Equal => None,
                    o => Some(o),
                })
            } else {
                compare_by_enclosure(a, b, max_digits)
            };
            found.ok_or_else(|| undecidable(max_digits, a, b))
        }
    }
}

fn compare_stream_rational(s: &DigitStream, r: &Rational, max_digits: usize) -> Option<Ordering> {
    // A canonical stream lies in [0, 1).
    if r.is_negative() {
        return Some(Ordering::Greater);
    }
    if *r >= Rational::one() {
        return Some(Ordering::Less);
    }
    let rs = DigitStream::of_rational(r, s.base()).ok()?;
    (0..max_digits).find_map(|i| match s.digit(i).cmp(&rs.digit(i)) {
        Ordering::Equal => None,
        o => Some(o),
    })
}

fn compare_by_enclosure(a: &RealValue, b: &RealValue, max_digits: usize) -> Option<Ordering> {
    let mut digits = 8.min(max_digits.max(1));
    loop {
        let (alo, ahi) = a.enclosure(digits);
        let (blo, bhi) = b.enclosure(digits);
        if ahi < blo {
            return Some(Ordering::Less);
        }
        if bhi < alo {
            return Some(Ordering::Greater);
        }
        if digits >= max_digits {
            return None;
        }
        digits = (digits * 2).min(max_digits);
    }
}

/// Truncated decimal expansion with `n_digits` fractional digits.
pub fn decimal_string(x: &RealValue, n_digits: usize) -> Result<String> {
    decimal_string_with_budget(x, n_digits, super::DEFAULT_SCAN_WINDOW)
}

pub fn decimal_string_with_budget(x: &RealValue, n_digits: usize, budget: usize) -> Result<String> {
    let s = match x {
        RealValue::Rational(r) => return Ok(r.to_decimal_string(n_digits)),
        RealValue::Stream(s) => s,
    };
    if let Some(v) = s.rational_value() {
        return Ok(v.to_decimal_string(n_digits));
    }
    let scale = Rational::from_integer(BigInt::from(10u32).pow(n_digits as u32));
    let mut digits = n_digits + 8;
    loop {
        let (lo, hi) = x.enclosure(digits);
        let floor_lo = (&lo * &scale).floor();
        // x < hi, so floor(x * 10^n) = floor(lo * 10^n) once hi <= (floor+1)/10^n.
        let next = Rational::from_integer(floor_lo.clone() + 1u32);
        if &hi * &scale <= next {
            return Ok(Rational::new(floor_lo, scale.numer().clone())?.to_decimal_string(n_digits));
        }
        if digits >= budget {
            return Err(Error::Undecidable {
                digits: budget,
                context: format!("decimal digit {n_digits} of {}", s.name()),
            });
        }
        digits = (digits * 2).min(budget);
    }
}
