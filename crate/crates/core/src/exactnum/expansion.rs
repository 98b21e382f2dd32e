use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::Rational;
use crate::error::{Error, Result};

/// Eventually periodic base-`b` expansion `0.(preperiod)(period)(period)…`.
///
/// Terminating expansions carry the period `[0]`; the preperiod is minimal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub base: u32,
    pub preperiod: Vec<u8>,
    pub period: Vec<u8>,
}

impl Expansion {
    pub fn digit(&self, i: usize) -> u8 {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    pub fn is_terminating(&self) -> bool {
        self.period == [0]
    }
}

pub(crate) fn check_base(base: u32) -> Result<()> {
    if (2..=256).contains(&base) {
        Ok(())
    } else {
        Err(Error::InvalidBase(base))
    }
}

/// Exact base-`base` expansion of `r ∈ [0, 1)` by long division.
///
/// The expansion is canonical: it never ends in a tail of `base - 1` digits.
pub fn digits_of_rational(r: &Rational, base: u32) -> Result<Expansion> {
    check_base(base)?;
    if !r.in_unit_interval() {
        return Err(Error::OutOfRange(format!("{r} is not in [0,1)")));
    }
    let q = r.denom().clone();
    let b = BigInt::from(base);
    let mut rem = r.numer().clone();
    let mut seen: HashMap<BigInt, usize> = HashMap::new();
    let mut digits = Vec::new();
    loop {
        if let Some(&start) = seen.get(&rem) {
            let period = digits.split_off(start);
            return Ok(Expansion {
                base,
                preperiod: digits,
                period,
            });
        }
        seen.insert(rem.clone(), digits.len());
        let (d, next) = (&rem * &b).div_rem(&q);
        digits.push(d.to_u8().expect("digit below base"));
        rem = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ratio;

    #[test]
    fn one_third_base_four() {
        let e = digits_of_rational(&ratio(1, 3), 4).unwrap();
        assert!(e.preperiod.is_empty());
        assert_eq!(e.period, vec![1]);
    }

    #[test]
    fn one_sixth_base_two() {
        let e = digits_of_rational(&ratio(1, 6), 2).unwrap();
        assert_eq!(e.preperiod, vec![0]);
        assert_eq!(e.period, vec![0, 1]);
    }

    #[test]
    fn terminating() {
        let e = digits_of_rational(&ratio(1, 2), 2).unwrap();
        assert_eq!(e.preperiod, vec![1]);
        assert_eq!(e.period, vec![0]);
        assert!(e.is_terminating());
        let z = digits_of_rational(&Rational::zero(), 10).unwrap();
        assert!(z.preperiod.is_empty());
        assert_eq!(z.period, vec![0]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(digits_of_rational(&ratio(1, 1), 4).is_err());
        assert!(digits_of_rational(&ratio(-1, 3), 4).is_err());
        assert!(digits_of_rational(&ratio(1, 3), 1).is_err());
    }
}
