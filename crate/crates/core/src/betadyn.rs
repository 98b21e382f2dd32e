//! β-transformations and the number-theoretic side of the finiteness
//! criteria: the integers ℓ and ℓ′, factor censuses of digit words, and the
//! identity between iterated preimages of a breakpoint and its orbit under
//! `T_β` (positive slope) or `T_{-β}` (negative slope).

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::contraction::{PiecewiseAffineContraction, SlopeSign};
use crate::exactnum::{DigitStream, Rational};
use crate::{Error, Result};

fn unit_check(x: &Rational) -> Result<()> {
    if x.in_unit_interval() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{x} is not in [0,1)")))
    }
}

/// `T_β(x) = βx + 1 - r` for `x ∈ [(r-1)/β, r/β)`, i.e. the fractional part of `βx`.
pub fn t_beta(x: &Rational, beta: u32) -> Result<Rational> {
    unit_check(x)?;
    Ok((x * &Rational::from_integer(beta)).fract())
}

/// `T_{-β}(x) = -βx + r` for `x ∈ ((r-1)/β, r/β]`, with `T_{-β}(0) = 0`.
pub fn t_neg_beta(x: &Rational, beta: u32) -> Result<Rational> {
    unit_check(x)?;
    let bx = x * &Rational::from_integer(beta);
    Ok(Rational::from_integer(bx.ceil()) - bx)
}

/// `T_{-β}(T_{-β}(x)) == T_{β²}(x)`.
pub fn square_identity_check(x: &Rational, beta: u32) -> Result<bool> {
    let lhs = t_neg_beta(&t_neg_beta(x, beta)?, beta)?;
    let rhs = t_beta(x, beta * beta)?;
    Ok(lhs == rhs)
}

/// Right-hand side `(1 - β^{-1})/(n + 1)` of the defining inequalities.
fn gap_bound(beta: u32, n: u32) -> Rational {
    let b = Rational::from_integer(beta);
    (Rational::one() - b.recip().expect("beta >= 2")) / Rational::from_integer(n + 1)
}

fn min_k(beta: u32, n: u32, exponent_scale: u32) -> u32 {
    assert!(beta >= 2 && n >= 2, "beta and n must be at least 2");
    let bound = gap_bound(beta, n);
    let b = Rational::from_integer(beta);
    (1..)
        .find(|&k| Rational::from_integer(2) * b.pow(-((exponent_scale * k) as i32)) < bound)
        .expect("geometric sequence eventually drops below a positive bound")
}

/// `ℓ = min{k ≥ 1 : 2β^{-k} < (1 - β^{-1})/(n + 1)}`.
pub fn ell(beta: u32, n: u32) -> u32 {
    min_k(beta, n, 1)
}

/// `ℓ′ = min{k ≥ 1 : 2β^{-2k} < (1 - β^{-1})/(n + 1)}`.
pub fn ell_prime(beta: u32, n: u32) -> u32 {
    min_k(beta, n, 2)
}

/// Smallest integer strictly greater than `x`.
fn strict_ceil(x: f64) -> u32 {
    x.floor() as u32 + 1
}

fn log_ratio(beta: u32, n: u32) -> f64 {
    (2.0 * f64::from(n + 1) / f64::from(beta - 1)).ln() / f64::from(beta).ln()
}

/// Closed form `1 + ⌈log(2(n+1)/(β-1)) / log β⌉` with the strict ceiling.
/// Floating point; unreliable when the logarithm ratio is an integer.
pub fn ell_closed_form(beta: u32, n: u32) -> u32 {
    1 + strict_ceil(log_ratio(beta, n))
}

/// Closed form `⌈1/2 + log(2(n+1)/(β-1)) / (2 log β)⌉` with the strict ceiling.
pub fn ell_prime_closed_form(beta: u32, n: u32) -> u32 {
    strict_ceil(0.5 + log_ratio(beta, n) / 2.0)
}

/// Distinct length-`k` factors of a digit word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorCensus {
    pub k: usize,
    pub base: u32,
    pub prefix_len: usize,
    pub count: u64,
    /// `base^k`.
    pub possible: u64,
    /// Words of length `k` not seen, in lexicographic order.
    pub missing: Vec<String>,
}

impl FactorCensus {
    pub fn complete(&self) -> bool {
        self.count == self.possible
    }
}

/// Largest `base^k` for which missing words are enumerated.
pub const MAX_CENSUS_WORDS: u64 = 1 << 24;

fn render_word(word: u64, k: usize, base: u32) -> String {
    let b = u64::from(base);
    let mut digits = vec![0u32; k];
    let mut w = word;
    for slot in digits.iter_mut().rev() {
        *slot = (w % b) as u32;
        w /= b;
    }
    if base <= 36 {
        digits
            .iter()
            .map(|&d| std::char::from_digit(d, 36).expect("digit below 36"))
            .collect()
    } else {
        digits.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
    }
}

pub fn factor_census(prefix: &[u8], k: usize, base: u32) -> Result<FactorCensus> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if prefix.len() < k {
        return Err(Error::PrefixTooShort { len: prefix.len(), k });
    }
    if let Some(d) = prefix.iter().find(|&&d| u32::from(d) >= base) {
        return Err(Error::InvalidArgument(format!("digit {d} not below base {base}")));
    }
    let possible = u64::from(base)
        .checked_pow(k as u32)
        .filter(|&p| p <= MAX_CENSUS_WORDS)
        .ok_or_else(|| Error::InvalidArgument(format!("{base}^{k} words are too many to enumerate")))?;
    let b = u64::from(base);
    let top = possible / b;
    let mut seen = vec![false; possible as usize];
    let mut word = prefix[..k].iter().fold(0u64, |acc, &d| acc * b + u64::from(d));
    seen[word as usize] = true;
    for &d in &prefix[k..] {
        word = (word % top) * b + u64::from(d);
        seen[word as usize] = true;
    }
    let missing: Vec<String> = seen
        .iter()
        .enumerate()
        .filter(|(_, &s)| !s)
        .map(|(w, _)| render_word(w as u64, k, base))
        .collect();
    Ok(FactorCensus {
        k,
        base,
        prefix_len: prefix.len(),
        count: possible - missing.len() as u64,
        possible,
        missing,
    })
}

/// Finite-prefix evidence for membership in the set of numbers whose
/// base-`base` expansion contains every word of length `k`.
///
/// Membership can be confirmed by a prefix but never refuted by one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RichnessEvidence {
    pub number: String,
    pub census: FactorCensus,
    pub confirmed: bool,
    pub statement: String,
}

pub fn richness_evidence(stream: &DigitStream, k: usize, prefix_len: usize) -> Result<RichnessEvidence> {
    let census = factor_census(&stream.prefix(prefix_len), k, stream.base())?;
    let confirmed = census.complete();
    let statement = if confirmed {
        format!(
            "all {} words of length {k} occur: confirmed by prefix of length {prefix_len}",
            census.possible
        )
    } else {
        format!(
            "{} of {} words of length {k} seen in prefix of length {prefix_len}: not yet confirmed",
            census.count, census.possible
        )
    };
    Ok(RichnessEvidence {
        number: stream.name(),
        census,
        confirmed,
        statement,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaVariant {
    /// `T_β`
    Plus,
    /// `T_{-β}`
    Minus,
    /// `T_{β²}`
    Squared,
}

impl BetaVariant {
    pub fn apply(self, x: &Rational, beta: u32) -> Result<Rational> {
        match self {
            BetaVariant::Plus => t_beta(x, beta),
            BetaVariant::Minus => t_neg_beta(x, beta),
            BetaVariant::Squared => t_beta(x, beta * beta),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Cycle,
    LeftImage,
    BoundExceeded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaOrbitReport {
    pub seed: Rational,
    pub beta: u32,
    pub variant: BetaVariant,
    pub preperiod: Vec<Rational>,
    pub cycle: Vec<Rational>,
    pub terminated: Termination,
}

/// Orbit of `x` under the chosen transformation until an exact revisit.
///
/// With `stay_in`, the orbit also stops at the first iterate (seed included)
/// for which the predicate fails; that iterate is the last entry of
/// `preperiod`.
pub fn beta_orbit(
    x: &Rational,
    beta: u32,
    variant: BetaVariant,
    max_steps: usize,
    stay_in: Option<&dyn Fn(&Rational) -> bool>,
) -> Result<BetaOrbitReport> {
    unit_check(x)?;
    let mut points: Vec<Rational> = Vec::new();
    let mut seen: HashMap<Rational, usize> = HashMap::new();
    let mut cur = x.clone();
    let report = |points: Vec<Rational>, cycle_start: Option<usize>, terminated| {
        let (preperiod, cycle) = match cycle_start {
            Some(j) => {
                let mut pre = points;
                let cyc = pre.split_off(j);
                (pre, cyc)
            }
            None => (points, Vec::new()),
        };
        BetaOrbitReport {
            seed: x.clone(),
            beta,
            variant,
            preperiod,
            cycle,
            terminated,
        }
    };
    for _ in 0..=max_steps {
        if let Some(&j) = seen.get(&cur) {
            return Ok(report(points, Some(j), Termination::Cycle));
        }
        let inside = stay_in.is_none_or(|p| p(&cur));
        seen.insert(cur.clone(), points.len());
        points.push(cur.clone());
        if !inside {
            return Ok(report(points, None, Termination::LeftImage));
        }
        cur = variant.apply(&cur, beta)?;
    }
    Ok(report(points, None, Termination::BoundExceeded))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainEnd {
    /// The last chain point has no preimage.
    Dead,
    /// The chain revisited one of its points.
    Cyclic,
    DepthExceeded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackwardReport {
    pub start: Rational,
    pub transform: BetaVariant,
    /// `chain[k] = f^{-k}(start)`, which equals `T^k(start)`.
    pub chain: Vec<Rational>,
    pub end: ChainEnd,
    /// Transform iterate following the last chain point.
    pub next_transform: Rational,
    /// For a dead chain: the last chain point lies in a gap of `f(I)`.
    pub death_point_in_gap: bool,
}

/// Runs iterated preimages of `x` side by side with the matching
/// β-transformation and checks they agree exactly until the preimage dies.
/// Any disagreement is returned as `Error::Mismatch`.
pub fn backward_equals_transform(
    f: &PiecewiseAffineContraction,
    x: &Rational,
    max_steps: usize,
) -> Result<BackwardReport> {
    unit_check(x)?;
    if !f.in_grid_form() {
        return Err(Error::InvalidArgument(
            "backward correspondence needs a map in grid form".into(),
        ));
    }
    let beta = f.beta();
    let transform = match f.sign() {
        SlopeSign::Positive => BetaVariant::Plus,
        SlopeSign::Negative => BetaVariant::Minus,
    };
    let images = f.image_components();
    let mut chain = vec![x.clone()];
    let mut seen: HashSet<Rational> = HashSet::from([x.clone()]);
    let mut end = ChainEnd::DepthExceeded;
    for _ in 0..max_steps {
        let y = chain.last().expect("non-empty");
        let t = transform.apply(y, beta)?;
        match f.preimage(y)? {
            Some(z) => {
                if z != t {
                    return Err(Error::Mismatch(format!(
                        "preimage of {y} is {z} but the transform gives {t}"
                    )));
                }
                if !seen.insert(z.clone()) {
                    chain.push(z);
                    end = ChainEnd::Cyclic;
                    break;
                }
                chain.push(z);
            }
            None => {
                if f.evaluate(&t)? == *y {
                    return Err(Error::Mismatch(format!(
                        "no preimage found for {y} but f({t}) = {y}"
                    )));
                }
                end = ChainEnd::Dead;
                break;
            }
        }
    }
    let last = chain.last().expect("non-empty").clone();
    let death_point_in_gap = end == ChainEnd::Dead && images.in_gap(&last);
    if end == ChainEnd::Dead && !death_point_in_gap {
        return Err(Error::Mismatch(format!("{last} has no preimage but lies in f(I)")));
    }
    Ok(BackwardReport {
        start: x.clone(),
        transform,
        next_transform: transform.apply(&last, beta)?,
        chain,
        end,
        death_point_in_gap,
    })
}

/// Denominator of `x` after removing factors shared with `beta`.
pub fn coprime_part(x: &Rational, beta: u32) -> BigInt {
    use num_integer::Integer;
    let b = BigInt::from(beta);
    let mut q = x.denom().clone();
    loop {
        let g = q.gcd(&b);
        if g == BigInt::from(1) {
            return q;
        }
        q /= g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ratio;
    use crate::exactnum::RealValue;

    #[test]
    fn transforms() {
        assert_eq!(t_beta(&ratio(1, 6), 2).unwrap(), ratio(1, 3));
        assert_eq!(t_beta(&ratio(2, 3), 2).unwrap(), ratio(1, 3));
        assert_eq!(t_beta(&ratio(1, 6), 4).unwrap(), ratio(2, 3));
        assert_eq!(t_neg_beta(&ratio(1, 6), 2).unwrap(), ratio(2, 3));
        assert_eq!(t_neg_beta(&ratio(0, 1), 2).unwrap(), ratio(0, 1));
        assert_eq!(t_neg_beta(&ratio(2, 3), 2).unwrap(), ratio(2, 3));
        // left-open branches: 1/2 = r/β lands on 0
        assert_eq!(t_neg_beta(&ratio(1, 2), 2).unwrap(), ratio(0, 1));
        assert!(t_beta(&ratio(1, 1), 2).is_err());
    }

    #[test]
    fn square_identity_examples() {
        assert!(square_identity_check(&ratio(1, 6), 2).unwrap());
        assert!(square_identity_check(&ratio(0, 1), 3).unwrap());
        assert!(square_identity_check(&ratio(5, 12), 2).unwrap());
        assert_eq!(t_neg_beta(&ratio(5, 12), 2).unwrap(), ratio(1, 6));
    }

    #[test]
    fn ells() {
        assert_eq!(ell_prime(2, 4), 3);
        assert_eq!(ell(2, 4), 5);
        assert_eq!(ell_prime(2, 2), 2);
        assert_eq!(ell_closed_form(2, 4), 5);
        assert_eq!(ell_prime_closed_form(2, 4), 3);
        assert_eq!(ell_prime_closed_form(2, 2), 2);
    }

    #[test]
    fn census_small() {
        let c = factor_census(&[0, 0, 0, 0], 2, 2).unwrap();
        assert_eq!(c.count, 1);
        assert_eq!(c.missing, vec!["01", "10", "11"]);
        let c = factor_census(&[0, 1, 0, 1], 1, 2).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.missing.is_empty());
        assert!(matches!(factor_census(&[0], 2, 2), Err(Error::PrefixTooShort { .. })));
        assert!(factor_census(&[0, 2], 1, 2).is_err());
    }

    #[test]
    fn champernowne_census() {
        let c = DigitStream::champernowne(4).unwrap();
        let census = factor_census(&c.prefix(10_000), 3, 4).unwrap();
        assert_eq!(census.count, 64);
        assert!(census.missing.is_empty());
        let ev = richness_evidence(&c, 3, 10_000).unwrap();
        assert!(ev.confirmed);
        assert!(ev.statement.contains("confirmed by prefix of length 10000"));
    }

    #[test]
    fn beta_orbits() {
        let r = beta_orbit(&ratio(1, 6), 2, BetaVariant::Plus, 10, None).unwrap();
        assert_eq!(r.preperiod, vec![ratio(1, 6)]);
        assert_eq!(r.cycle, vec![ratio(1, 3), ratio(2, 3)]);
        assert_eq!(r.terminated, Termination::Cycle);
        let z = beta_orbit(&ratio(0, 1), 2, BetaVariant::Minus, 5, None).unwrap();
        assert_eq!(z.cycle, vec![ratio(0, 1)]);
        let s = beta_orbit(&ratio(1, 5), 4, BetaVariant::Squared, 10, None).unwrap();
        assert_eq!(s.terminated, Termination::Cycle);
        assert!(s.preperiod.iter().chain(&s.cycle).all(|p| p.denom() == &BigInt::from(5)));
        let bounded = beta_orbit(&ratio(1, 7), 2, BetaVariant::Plus, 1, None).unwrap();
        assert_eq!(bounded.terminated, Termination::BoundExceeded);
        let pred = |x: &Rational| *x < ratio(1, 2);
        let left = beta_orbit(&ratio(1, 6), 2, BetaVariant::Plus, 10, Some(&pred)).unwrap();
        assert_eq!(left.terminated, Termination::LeftImage);
        assert_eq!(left.preperiod, vec![ratio(1, 6), ratio(1, 3), ratio(2, 3)]);
    }

    fn r(p: i64, q: i64) -> RealValue {
        ratio(p, q).into()
    }

    #[test]
    fn backward_chain_server_map() {
        let f = crate::contraction::server_map(r(1, 6), r(1, 2), r(5, 6)).unwrap();
        let rep = backward_equals_transform(&f, &ratio(1, 6), 10).unwrap();
        assert_eq!(rep.chain, vec![ratio(1, 6), ratio(2, 3)]);
        assert_eq!(rep.end, ChainEnd::Dead);
        assert!(rep.death_point_in_gap);
        assert_eq!(rep.next_transform, ratio(2, 3));
    }

    #[test]
    fn backward_chain_two_branch() {
        let f = PiecewiseAffineContraction::grid_form(2, SlopeSign::Positive, vec![r(0, 1), r(1, 2), r(1, 1)], vec![1, 2])
            .unwrap();
        // Oracle: both affine candidates 2y and 2y - 1 fail branch membership.
        let rep = backward_equals_transform(&f, &ratio(1, 2), 5).unwrap();
        assert_eq!(rep.chain, vec![ratio(1, 2)]);
        assert_eq!(rep.end, ChainEnd::Dead);
        assert_eq!(rep.next_transform, ratio(0, 1));
    }

    #[test]
    fn backward_chain_cyclic() {
        // f(1/3) = 2/3 on [1/3, 1/2) and f(2/3) = 1/3 on [1/2, 1)
        let f = PiecewiseAffineContraction::grid_form(
            2,
            SlopeSign::Positive,
            vec![r(0, 1), r(1, 3), r(1, 2), r(1, 1)],
            vec![2, 2, 1],
        )
        .unwrap();
        let rep = backward_equals_transform(&f, &ratio(1, 3), 10).unwrap();
        assert_eq!(rep.end, ChainEnd::Cyclic);
        assert_eq!(rep.chain, vec![ratio(1, 3), ratio(2, 3), ratio(1, 3)]);
    }

    #[test]
    fn coprime_denominators() {
        assert_eq!(coprime_part(&ratio(1, 12), 2), BigInt::from(3));
    }
}
