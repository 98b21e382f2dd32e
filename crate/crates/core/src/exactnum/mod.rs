//! Exact scalars: reduced rationals, lazily generated digit streams, and
//! comparisons between them that either decide exactly or report
//! `Undecidable`.

mod expansion;
mod rational;
mod real;
mod stream;

pub use expansion::{digits_of_rational, Expansion};
pub use rational::{ratio, Rational};
pub use real::{compare, decimal_string, decimal_string_with_budget, RealValue, DEFAULT_COMPARE_DIGITS};
pub use stream::{DigitStream, StreamSummary, DEFAULT_SCAN_WINDOW};


/// `make_rational`: reduced `p/q`, failing on a zero denominator.
pub fn make_rational(p: i64, q: i64) -> crate::Result<Rational> {
    Rational::new(p, q)
}

/// Base-`base` Champernowne stream.
pub fn champernowne_stream(base: u32) -> crate::Result<DigitStream> {
    DigitStream::champernowne(base)
}

/// `s + r` with the default scan window.
pub fn offset_add(s: &DigitStream, r: &Rational) -> crate::Result<DigitStream> {
    s.offset_add(r)
}
