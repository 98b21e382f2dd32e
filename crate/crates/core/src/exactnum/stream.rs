use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::expansion::{check_base, digits_of_rational, Expansion};
use super::rational::terminating_length;
use super::Rational;
use crate::error::{Error, Result};

/// Default number of digits scanned when resolving a carry or borrow.
pub const DEFAULT_SCAN_WINDOW: usize = 10_000;

/// A lazily generated base-`b` digit sequence `w_0 w_1 …` standing for
/// `Σ w_i b^{-(i+1)}`.
///
/// Handles are cheap to clone and share one generator; identity of the
/// underlying generator is what [`DigitStream::same_object`] tests. The
/// memoized prefix is guarded by a mutex, so streams are `Send + Sync` and
/// may be read concurrently.
#[derive(Clone)]
pub struct DigitStream(Arc<Inner>);

struct Inner {
    base: u32,
    source: Source,
}

enum Source {
    Champernowne(Mutex<ChampernowneCache>),
    Periodic(Expansion),
    /// Digits of `root` with the first `head.len()` digits replaced; value is
    /// `root + offset`.
    Offset {
        head: Vec<u8>,
        root: DigitStream,
        offset: Rational,
    },
}

struct ChampernowneCache {
    digits: Vec<u8>,
    next: u64,
}

/// JSON form of a stream: base, a digit prefix, and the generator name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub base: u32,
    pub prefix: Vec<u8>,
    pub generator: String,
}

impl DigitStream {
    /// Base-`base` Champernowne word: the numerals 1, 2, 3, … concatenated.
    pub fn champernowne(base: u32) -> Result<Self> {
        check_base(base)?;
        Ok(Self(Arc::new(Inner {
            base,
            source: Source::Champernowne(Mutex::new(ChampernowneCache {
                digits: Vec::new(),
                next: 1,
            })),
        })))
    }

    /// Stream of an eventually periodic expansion.
    pub fn periodic(expansion: Expansion) -> Result<Self> {
        check_base(expansion.base)?;
        if expansion.period.is_empty() {
            return Err(Error::InvalidArgument("empty period".into()));
        }
        if expansion
            .preperiod
            .iter()
            .chain(&expansion.period)
            .any(|&d| u32::from(d) >= expansion.base)
        {
            return Err(Error::InvalidArgument("digit not below base".into()));
        }
        if expansion.period.iter().all(|&d| u32::from(d) == expansion.base - 1) {
            return Err(Error::InvalidArgument(
                "non-canonical expansion with a tail of maximal digits".into(),
            ));
        }
        Ok(Self(Arc::new(Inner {
            base: expansion.base,
            source: Source::Periodic(expansion),
        })))
    }

    /// Stream of the canonical expansion of a rational in `[0, 1)`.
    pub fn of_rational(r: &Rational, base: u32) -> Result<Self> {
        Self::periodic(digits_of_rational(r, base)?)
    }

    pub fn base(&self) -> u32 {
        self.0.base
    }

    pub fn same_object(&self, other: &DigitStream) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn digit(&self, i: usize) -> u8 {
        match &self.0.source {
            Source::Champernowne(cache) => {
                let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
                while cache.digits.len() <= i {
                    let n = cache.next;
                    cache.next += 1;
                    push_numeral(&mut cache.digits, n, self.0.base);
                }
                cache.digits[i]
            }
            Source::Periodic(e) => e.digit(i),
            Source::Offset { head, root, .. } => match head.get(i) {
                Some(&d) => d,
                None => root.digit(i),
            },
        }
    }

    pub fn prefix(&self, len: usize) -> Vec<u8> {
        if let Source::Champernowne(cache) = &self.0.source {
            if len > 0 {
                self.digit(len - 1);
            }
            let cache = cache.lock().unwrap_or_else(|e| e.into_inner());
            return cache.digits[..len].to_vec();
        }
        (0..len).map(|i| self.digit(i)).collect()
    }

    /// Value of the first `len` digits, a lower bound within `base^-len`.
    pub fn prefix_value(&self, len: usize) -> Rational {
        let b = BigInt::from(self.0.base);
        let mut n = BigInt::zero();
        for d in self.prefix(len) {
            n = n * &b + BigInt::from(d);
        }
        Rational::new(n, b.pow(len as u32)).expect("positive power")
    }

    /// Exact value when the stream is known to be rational.
    pub fn rational_value(&self) -> Option<Rational> {
        match &self.0.source {
            Source::Periodic(e) => Some(expansion_value(e)),
            Source::Offset { root, offset, .. } => root.rational_value().map(|v| v + offset),
            Source::Champernowne(_) => None,
        }
    }

    /// Generator name, e.g. `champernowne(4)` or `champernowne(4)+1/2`.
    pub fn name(&self) -> String {
        match &self.0.source {
            Source::Champernowne(_) => format!("champernowne({})", self.0.base),
            Source::Periodic(e) => format!("rational({})", expansion_value(e)),
            Source::Offset { root, offset, .. } => {
                if offset.is_negative() {
                    format!("{}-{}", root.name(), offset.abs())
                } else {
                    format!("{}+{}", root.name(), offset)
                }
            }
        }
    }

    pub fn summary(&self, prefix_len: usize) -> StreamSummary {
        StreamSummary {
            base: self.0.base,
            prefix: self.prefix(prefix_len),
            generator: self.name(),
        }
    }

    fn decompose(&self) -> (DigitStream, Rational) {
        match &self.0.source {
            Source::Offset { root, offset, .. } => (root.clone(), offset.clone()),
            _ => (self.clone(), Rational::zero()),
        }
    }

    /// `self + r` for a rational `r` with terminating expansion in this
    /// stream's base, using the default scan window.
    pub fn offset_add(&self, r: &Rational) -> Result<Self> {
        self.offset_add_with_window(r, DEFAULT_SCAN_WINDOW)
    }

    /// `self + r`; only a finite prefix of digits changes. The result must lie
    /// in `(0, 1)`. Offsets compose, so the returned stream always refers to the
    /// original generator.
    pub fn offset_add_with_window(&self, r: &Rational, window: usize) -> Result<Self> {
        let (root, base_offset) = self.decompose();
        let total = &base_offset + r;
        if total.is_zero() {
            return Ok(root);
        }
        let base = self.0.base;
        let m = terminating_length(total.denom(), base, window)
            .ok_or_else(|| Error::NonTerminating(r.to_string(), base))?;
        let b = BigInt::from(base);
        let scale = b.pow(m as u32);
        let mut head_int = BigInt::zero();
        for d in root.prefix(m) {
            head_int = head_int * &b + BigInt::from(d);
        }
        // total * base^m is an integer by choice of m
        let shift = total.numer() * (&scale / total.denom());
        let sum = head_int + shift;
        if sum.sign() == num_bigint::Sign::Minus {
            return Err(Error::OutOfRange(format!("{} + ({}) is negative", self.name(), r)));
        }
        if sum >= scale {
            return Err(Error::OutOfRange(format!("{} + {} is at least 1", self.name(), r)));
        }
        if sum.is_zero() {
            // Value is tail * base^-m; it must be positive.
            let nonzero = (m..m + window).any(|i| root.digit(i) != 0);
            if !nonzero {
                return Err(Error::Undecidable {
                    digits: window,
                    context: format!("{} + {} may be zero", self.name(), r),
                });
            }
        }
        let mut head = vec![0u8; m];
        let mut rest = sum;
        for slot in head.iter_mut().rev() {
            let (q, d) = rest.div_rem(&b);
            *slot = d.to_u8().expect("digit below base");
            rest = q;
        }
        Ok(Self(Arc::new(Inner {
            base,
            source: Source::Offset {
                head,
                root,
                offset: total,
            },
        })))
    }
}

fn push_numeral(out: &mut Vec<u8>, mut n: u64, base: u32) {
    let start = out.len();
    let b = u64::from(base);
    while n > 0 {
        out.push((n % b) as u8);
        n /= b;
    }
    out[start..].reverse();
}

/// Exact value of an eventually periodic expansion via the geometric series.
pub(crate) fn expansion_value(e: &Expansion) -> Rational {
    let b = BigInt::from(e.base);
    let digits_int = |ds: &[u8]| {
        ds.iter()
            .fold(BigInt::zero(), |acc, &d| acc * &b + BigInt::from(d))
    };
    let pre_len = e.preperiod.len() as u32;
    let per_len = e.period.len() as u32;
    let pre = Rational::new(digits_int(&e.preperiod), b.pow(pre_len)).expect("positive");
    let per = Rational::new(digits_int(&e.period), b.pow(per_len) - 1u32).expect("positive");
    let shift = Rational::new(1, b.pow(pre_len)).expect("positive");
    pre + per * shift
}

impl fmt::Debug for DigitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: String = self
            .prefix(12)
            .iter()
            .map(|d| std::char::from_digit(u32::from(*d), 36).unwrap_or('?'))
            .collect();
        write!(f, "DigitStream({}, base {}, 0.{}…)", self.name(), self.0.base, digits)
    }
}

impl fmt::Display for DigitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ratio;

    #[test]
    fn champernowne_base_four_prefix() {
        let c = DigitStream::champernowne(4).unwrap();
        assert_eq!(c.prefix(13), vec![1, 2, 3, 1, 0, 1, 1, 1, 2, 1, 3, 2, 0]);
    }

    #[test]
    fn champernowne_small_bases() {
        let c2 = DigitStream::champernowne(2).unwrap();
        assert_eq!(c2.prefix(6), vec![1, 1, 0, 1, 1, 1]);
        let c10 = DigitStream::champernowne(10).unwrap();
        assert_eq!(c10.prefix(10), vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 1]);
        assert_eq!(c10.digit(10), 0);
        assert!(DigitStream::champernowne(1).is_err());
    }

    #[test]
    fn offset_changes_first_digit() {
        let c = DigitStream::champernowne(4).unwrap();
        let lo = c.offset_add(&ratio(-1, 4)).unwrap();
        assert_eq!(lo.prefix(6), vec![0, 2, 3, 1, 0, 1]);
        let hi = c.offset_add(&ratio(1, 2)).unwrap();
        assert_eq!(hi.prefix(6), vec![3, 2, 3, 1, 0, 1]);
        assert_eq!(hi.name(), "champernowne(4)+1/2");
        assert_eq!(lo.name(), "champernowne(4)-1/4");
        assert!(c.offset_add(&Rational::zero()).unwrap().same_object(&c));
    }

    #[test]
    fn offset_with_borrow() {
        // 0.1231… - 0.0232 (base 4) borrows across two digits
        let c = DigitStream::champernowne(4).unwrap();
        let r = Rational::new(2 * 16 + 3 * 4 + 2, 256).unwrap();
        let s = c.offset_add(&-&r).unwrap();
        let expected = c.prefix_value(40) - &r;
        assert_eq!(s.prefix_value(40), expected);
    }

    #[test]
    fn offset_errors() {
        let c = DigitStream::champernowne(4).unwrap();
        assert!(matches!(c.offset_add(&ratio(3, 4)), Err(Error::OutOfRange(_))));
        assert!(matches!(c.offset_add(&ratio(-1, 2)), Err(Error::OutOfRange(_))));
        assert!(matches!(c.offset_add(&ratio(1, 3)), Err(Error::NonTerminating(..))));
        let q = DigitStream::of_rational(&ratio(1, 4), 4).unwrap();
        assert!(matches!(
            q.offset_add_with_window(&ratio(-1, 4), 50),
            Err(Error::Undecidable { .. })
        ));
    }

    #[test]
    fn offsets_compose_back_to_root() {
        let c = DigitStream::champernowne(4).unwrap();
        let s = c.offset_add(&ratio(1, 2)).unwrap();
        let back = s.offset_add(&ratio(-1, 2)).unwrap();
        assert!(back.same_object(&c));
        let s2 = s.offset_add(&ratio(-1, 4)).unwrap();
        assert_eq!(s2.name(), "champernowne(4)+1/4");
        assert_eq!(s2.prefix(3), vec![2, 2, 3]);
    }

    #[test]
    fn periodic_rejects_max_tail() {
        let e = Expansion {
            base: 10,
            preperiod: vec![],
            period: vec![9],
        };
        assert!(DigitStream::periodic(e).is_err());
    }

    #[test]
    fn rational_value_round_trip() {
        let s = DigitStream::of_rational(&ratio(5, 7), 3).unwrap();
        assert_eq!(s.rational_value(), Some(ratio(5, 7)));
    }

    #[test]
    fn concurrent_reads_agree() {
        let c = DigitStream::champernowne(4).unwrap();
        let expected = DigitStream::champernowne(4).unwrap().prefix(5000);
        std::thread::scope(|scope| {
            for t in 0..8 {
                let c = c.clone();
                let expected = &expected;
                scope.spawn(move || {
                    for i in (t..5000).step_by(7) {
                        assert_eq!(c.digit(i), expected[i]);
                    }
                });
            }
        });
        assert_eq!(c.prefix(5000), expected);
    }
}
