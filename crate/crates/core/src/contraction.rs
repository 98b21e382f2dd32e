//! n-interval piecewise ±(1/β)-affine contractions of `I = [0, 1)`.
//!
//! Branch `i` (1-based) acts on `[x_{i-1}, x_i)` as `x ↦ λx + a_i` with
//! `λ = ±1/β`. In grid form the intercepts are `(α_i - 1)/β` (positive
//! slope) or `α_i/β` (negative slope) with `α_i ∈ {1, …, β}`.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::exactnum::{compare, Rational, RealValue, DEFAULT_COMPARE_DIGITS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlopeSign {
    Positive,
    Negative,
}

impl SlopeSign {
    pub fn as_i8(self) -> i8 {
        match self {
            SlopeSign::Positive => 1,
            SlopeSign::Negative => -1,
        }
    }

    pub fn from_i8(s: i8) -> Result<Self> {
        match s {
            1 => Ok(SlopeSign::Positive),
            -1 => Ok(SlopeSign::Negative),
            _ => Err(Error::InvalidMap(format!("slope sign must be +1 or -1, got {s}"))),
        }
    }
}

/// `x ↦ slope·x + intercept` with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Affine {
    pub slope: Rational,
    pub intercept: Rational,
}

impl Affine {
    pub fn identity() -> Self {
        Affine {
            slope: Rational::one(),
            intercept: Rational::zero(),
        }
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.intercept
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &Affine) -> Affine {
        Affine {
            slope: &self.slope * &inner.slope,
            intercept: &self.slope * &inner.intercept + &self.intercept,
        }
    }

    /// Unique fixed point; `None` when the slope is 1.
    pub fn fixed_point(&self) -> Option<Rational> {
        let denom = Rational::one() - &self.slope;
        if denom.is_zero() {
            return None;
        }
        Some(&self.intercept / &denom)
    }
}

/// An interval with rational endpoints and explicit closedness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            Ordering::Less => false,
            Ordering::Equal => !(self.lo_closed && self.hi_closed),
            Ordering::Greater => true,
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = if self.lo_closed { *x >= self.lo } else { *x > self.lo };
        let below = if self.hi_closed { *x <= self.hi } else { *x < self.hi };
        above && below
    }
}

/// Images of the branches (merged) and the complementary gaps in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageComponents {
    pub images: Vec<Interval>,
    pub gaps: Vec<Interval>,
    /// False when stream breakpoints were replaced by rational lower bounds.
    pub exact: bool,
}

impl ImageComponents {
    pub fn max_gap(&self) -> Rational {
        self.gaps
            .iter()
            .map(Interval::length)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn image_measure(&self) -> Rational {
        self.images
            .iter()
            .fold(Rational::zero(), |acc, i| acc + i.length())
    }

    pub fn in_image(&self, y: &Rational) -> bool {
        self.images.iter().any(|i| i.contains(y))
    }

    pub fn in_gap(&self, y: &Rational) -> bool {
        self.gaps.iter().any(|g| g.contains(y))
    }
}

#[derive(Clone, Debug)]
pub struct PiecewiseAffineContraction {
    beta: u32,
    sign: SlopeSign,
    breakpoints: Vec<RealValue>,
    intercepts: Vec<Rational>,
    alphas: Option<Vec<u32>>,
    compare_digits: usize,
}

/// Result of evaluating the map at a possibly irrational point.
#[derive(Clone, Debug)]
pub enum Image {
    Exact(Rational),
    /// `branch` applied to the stream `x`, kept symbolic.
    Deferred { branch: usize, x: RealValue },
}

impl PiecewiseAffineContraction {
    /// Map in grid form: intercepts `(α_i - 1)/β` for positive slope and
    /// `α_i/β` for negative slope.
    pub fn grid_form(
        beta: u32,
        sign: SlopeSign,
        breakpoints: Vec<RealValue>,
        alphas: Vec<u32>,
    ) -> Result<Self> {
        if beta < 2 {
            return Err(Error::InvalidMap(format!("beta must be at least 2, got {beta}")));
        }
        if let Some(bad) = alphas.iter().find(|&&a| a < 1 || a > beta) {
            return Err(Error::InvalidMap(format!("alpha {bad} outside 1..={beta}")));
        }
        if sign == SlopeSign::Negative && alphas.first() == Some(&beta) {
            return Err(Error::InvalidMap(
                "negative slope requires alpha_1 != beta".into(),
            ));
        }
        let b = Rational::from_integer(beta);
        let intercepts = alphas
            .iter()
            .map(|&a| {
                let a = Rational::from_integer(a);
                match sign {
                    SlopeSign::Positive => (a - Rational::one()) / &b,
                    SlopeSign::Negative => a / &b,
                }
            })
            .collect();
        let mut map = Self::build(beta, sign, breakpoints, intercepts)?;
        map.alphas = Some(alphas);
        Ok(map)
    }

    /// General form with arbitrary rational intercepts; every branch image
    /// must stay inside `[0, 1)`. Intercepts on the α/β grid are
    /// recognized and recorded as alphas.
    pub fn with_intercepts(
        beta: u32,
        sign: SlopeSign,
        breakpoints: Vec<RealValue>,
        intercepts: Vec<Rational>,
    ) -> Result<Self> {
        if beta < 2 {
            return Err(Error::InvalidMap(format!("beta must be at least 2, got {beta}")));
        }
        let mut map = Self::build(beta, sign, breakpoints, intercepts)?;
        map.alphas = map.grid_alphas();
        Ok(map)
    }

    fn build(
        beta: u32,
        sign: SlopeSign,
        breakpoints: Vec<RealValue>,
        intercepts: Vec<Rational>,
    ) -> Result<Self> {
        let n = intercepts.len();
        if n < 2 {
            return Err(Error::InvalidMap(format!("need at least 2 branches, got {n}")));
        }
        if breakpoints.len() != n + 1 {
            return Err(Error::InvalidMap(format!(
                "{} breakpoints given for {n} branches",
                breakpoints.len()
            )));
        }
        let is = |v: &RealValue, r: Rational| v.as_rational() == Some(&r);
        if !is(&breakpoints[0], Rational::zero()) || !is(&breakpoints[n], Rational::one()) {
            return Err(Error::InvalidMap("breakpoints must start at 0 and end at 1".into()));
        }
        let map = PiecewiseAffineContraction {
            beta,
            sign,
            breakpoints,
            intercepts,
            alphas: None,
            compare_digits: DEFAULT_COMPARE_DIGITS,
        };
        for w in map.breakpoints.windows(2) {
            if map.cmp(&w[0], &w[1])? != Ordering::Less {
                return Err(Error::InvalidMap(format!(
                    "breakpoints not strictly increasing at {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        for i in 1..=n {
            map.check_branch_image(i)?;
        }
        Ok(map)
    }

    /// Branch `i` maps `[x_{i-1}, x_i)` into `[0, 1)`.
    fn check_branch_image(&self, i: usize) -> Result<()> {
        let aff = self.branch_map(i);
        let beta = Rational::from_integer(self.beta);
        // Preimages under this branch of the levels 0 and 1.
        let z0 = RealValue::from(-&aff.intercept * &beta * self.sign_rational());
        let z1 = RealValue::from((Rational::one() - &aff.intercept) * &beta * self.sign_rational());
        let (left, right) = (&self.breakpoints[i - 1], &self.breakpoints[i]);
        let escape = || {
            Error::InvalidMap(format!(
                "branch {i} maps [{left}, {right}) outside [0,1)"
            ))
        };
        match self.sign {
            SlopeSign::Positive => {
                // image [f(left), f(right^-)): need f(left) >= 0 and f(right) <= 1
                if self.cmp(left, &z0)? == Ordering::Less || self.cmp(right, &z1)? == Ordering::Greater {
                    return Err(escape());
                }
            }
            SlopeSign::Negative => {
                // image (f(right), f(left)]: need f(right) >= 0 and f(left) < 1
                if self.cmp(right, &z0)? == Ordering::Greater || self.cmp(left, &z1)? != Ordering::Greater {
                    return Err(escape());
                }
            }
        }
        Ok(())
    }

    fn grid_alphas(&self) -> Option<Vec<u32>> {
        let beta = Rational::from_integer(self.beta);
        let alphas: Option<Vec<u32>> = self
            .intercepts
            .iter()
            .map(|a| {
                let scaled = a * &beta;
                let alpha = match self.sign {
                    SlopeSign::Positive => scaled + Rational::one(),
                    SlopeSign::Negative => scaled,
                };
                if !alpha.is_integer() {
                    return None;
                }
                let v: u32 = alpha.numer().try_into().ok()?;
                (1..=self.beta).contains(&v).then_some(v)
            })
            .collect();
        let alphas = alphas?;
        if self.sign == SlopeSign::Negative && alphas[0] == self.beta {
            return None;
        }
        Some(alphas)
    }

    pub fn with_compare_digits(mut self, digits: usize) -> Self {
        self.compare_digits = digits;
        self
    }

    pub fn compare_digits(&self) -> usize {
        self.compare_digits
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn sign(&self) -> SlopeSign {
        self.sign
    }

    /// Number of branches.
    pub fn n(&self) -> usize {
        self.intercepts.len()
    }

    pub fn breakpoints(&self) -> &[RealValue] {
        &self.breakpoints
    }

    pub fn intercepts(&self) -> &[Rational] {
        &self.intercepts
    }

    pub fn alphas(&self) -> Option<&[u32]> {
        self.alphas.as_deref()
    }

    /// Whether the intercepts fit the α/β grid of the finiteness results.
    pub fn in_grid_form(&self) -> bool {
        self.alphas.is_some()
    }

    /// All breakpoints rational: every operation runs in exact mode.
    pub fn is_exact(&self) -> bool {
        self.breakpoints.iter().all(RealValue::is_rational)
    }

    pub fn rational_breakpoints(&self) -> Option<Vec<Rational>> {
        self.breakpoints
            .iter()
            .map(|b| b.as_rational().cloned())
            .collect()
    }

    fn sign_rational(&self) -> Rational {
        Rational::from_integer(self.sign.as_i8())
    }

    pub fn slope(&self) -> Rational {
        self.sign_rational() / Rational::from_integer(self.beta)
    }

    /// Affine formula of branch `i` (1-based).
    pub fn branch_map(&self, i: usize) -> Affine {
        Affine {
            slope: self.slope(),
            intercept: self.intercepts[i - 1].clone(),
        }
    }

    fn cmp(&self, a: &RealValue, b: &RealValue) -> Result<Ordering> {
        compare(a, b, self.compare_digits)
    }

    pub(crate) fn cmp_point(&self, x: &Rational, bp: &RealValue) -> Result<Ordering> {
        match bp {
            RealValue::Rational(r) => Ok(x.cmp(r)),
            _ => compare(&RealValue::Rational(x.clone()), bp, self.compare_digits),
        }
    }

    /// Index `i ∈ 1..=n` with `x_{i-1} <= x < x_i`.
    pub fn branch_of(&self, x: &Rational) -> Result<usize> {
        if !x.in_unit_interval() {
            return Err(Error::OutOfRange(format!("{x} is not in [0,1)")));
        }
        // Largest i with x_{i-1} <= x, searched over interior breakpoints.
        let (mut lo, mut hi) = (1usize, self.n());
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.cmp_point(x, &self.breakpoints[mid - 1])? == Ordering::Less {
                hi = mid - 1;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    pub fn branch_of_real(&self, x: &RealValue) -> Result<usize> {
        match x {
            RealValue::Rational(r) => self.branch_of(r),
            RealValue::Stream(_) => {
                let mut i = 1;
                while i < self.n() && self.cmp(x, &self.breakpoints[i])? != Ordering::Less {
                    i += 1;
                }
                Ok(i)
            }
        }
    }

    /// Whether `x` lies in the closure `[x_{i-1}, x_i]` of branch `i`.
    pub(crate) fn in_branch_closure(&self, x: &Rational, i: usize) -> Result<bool> {
        Ok(self.cmp_point(x, &self.breakpoints[i - 1])? != Ordering::Less
            && self.cmp_point(x, &self.breakpoints[i])? != Ordering::Greater)
    }

    pub(crate) fn in_branch(&self, x: &Rational, i: usize) -> Result<bool> {
        Ok(self.cmp_point(x, &self.breakpoints[i - 1])? != Ordering::Less
            && self.cmp_point(x, &self.breakpoints[i])? == Ordering::Less)
    }

    pub fn evaluate(&self, x: &Rational) -> Result<Rational> {
        let i = self.branch_of(x)?;
        Ok(self.branch_map(i).apply(x))
    }

    /// Evaluation at a possibly irrational point; stream arguments yield a
    /// symbolic image.
    pub fn evaluate_real(&self, x: &RealValue) -> Result<Image> {
        match x {
            RealValue::Rational(r) => self.evaluate(r).map(Image::Exact),
            RealValue::Stream(_) => Ok(Image::Deferred {
                branch: self.branch_of_real(x)?,
                x: x.clone(),
            }),
        }
    }

    pub fn forward_orbit(&self, x: &Rational, max_steps: usize) -> Result<Orbit> {
        let mut points = vec![x.clone()];
        let mut branches = Vec::with_capacity(max_steps);
        for _ in 0..max_steps {
            let cur = points.last().expect("non-empty");
            let i = self.branch_of(cur)?;
            let next = self.branch_map(i).apply(cur);
            branches.push(i);
            points.push(next);
        }
        Ok(Orbit {
            seed: x.clone(),
            points,
            branches,
        })
    }

    pub fn detect_cycle(&self, x: &Rational, max_steps: usize) -> Result<CycleResult> {
        self.detect_cycle_with(
            x,
            &CycleOptions {
                max_steps,
                ..CycleOptions::default()
            },
        )
    }

    /// Finds the periodic orbit attracting `x`.
    ///
    /// Exact revisits are detected directly. Otherwise, once the branch
    /// itinerary has repeated a window of length `p` twice, the fixed point
    /// of the composed branches is computed exactly. If every point of that
    /// candidate cycle lies in the closure of the branch it is attached to,
    /// the orbit provably follows the periodic itinerary forever and
    /// converges to the candidate: the error at each phase is multiplied by
    /// the slope of the composition, so later iterates stay between the
    /// cycle point and one of the two observed iterates.
    pub fn detect_cycle_with(&self, x: &Rational, opts: &CycleOptions) -> Result<CycleResult> {
        let mut xs: Vec<Rational> = Vec::new();
        let mut bs: Vec<usize> = Vec::new();
        let mut seen: HashMap<Rational, usize> = HashMap::new();
        let mut cur = x.clone();
        for k in 0..=opts.max_steps {
            if let Some(&j) = seen.get(&cur) {
                return Ok(CycleResult {
                    seed: x.clone(),
                    status: CycleStatus::Cycle {
                        preperiod: j,
                        exact_entry: true,
                    },
                    points: xs[j..].to_vec(),
                    steps: k,
                });
            }
            let b = self.branch_of(&cur)?;
            seen.insert(cur.clone(), k);
            xs.push(cur.clone());
            bs.push(b);
            if let Some(found) = self.certify(&xs, &bs, opts.max_period)? {
                let mut found = found;
                found.seed = x.clone();
                found.steps = k;
                return Ok(found);
            }
            cur = self.branch_map(b).apply(&cur);
        }
        Ok(CycleResult {
            seed: x.clone(),
            status: CycleStatus::NoCycleWithinBound,
            points: Vec::new(),
            steps: opts.max_steps,
        })
    }

    fn certify(&self, xs: &[Rational], bs: &[usize], max_period: usize) -> Result<Option<CycleResult>> {
        let len = bs.len();
        for p in 1..=max_period.min(len / 2) {
            let start = len - 2 * p;
            if bs[start..start + p] != bs[start + p..] {
                continue;
            }
            let window = &bs[start..start + p];
            let composed = window
                .iter()
                .fold(Affine::identity(), |acc, &i| self.branch_map(i).after(&acc));
            let Some(c0) = composed.fixed_point() else {
                continue;
            };
            let mut points = Vec::with_capacity(p);
            let mut c = c0;
            let mut genuine = true;
            let mut valid = true;
            for &i in window {
                if !self.in_branch_closure(&c, i)? {
                    valid = false;
                    break;
                }
                if !(c.in_unit_interval() && self.in_branch(&c, i)?) {
                    genuine = false;
                }
                let next = self.branch_map(i).apply(&c);
                points.push(c);
                c = next;
            }
            if !valid {
                continue;
            }
            let mut first = start;
            while first > 0 && bs[first - 1] == bs[first - 1 + p] {
                first -= 1;
            }
            let phase = (start - first) % p;
            // rotate so points[0] is the limit of the iterate at index `first`
            points.rotate_right(phase);
            let exact_entry = (first..len).find(|&t| xs[t] == points[(t - first) % p]);
            let (preperiod, exact) = match exact_entry {
                Some(t) => {
                    let shift = (t - first) % p;
                    points.rotate_left(shift);
                    (t, true)
                }
                None => (first, false),
            };
            let status = if genuine {
                CycleStatus::Cycle {
                    preperiod,
                    exact_entry: exact,
                }
            } else {
                CycleStatus::BoundaryLimit { preperiod }
            };
            return Ok(Some(CycleResult {
                seed: Rational::zero(),
                status,
                points,
                steps: 0,
            }));
        }
        Ok(None)
    }

    /// Images of the branches, merged, and the gaps of `[0, 1)` they leave.
    pub fn image_components(&self) -> ImageComponents {
        let exact = self.is_exact();
        let bps: Vec<Rational> = self
            .breakpoints
            .iter()
            .map(|b| b.enclosure(self.compare_digits).0)
            .collect();
        let mut pieces: Vec<Interval> = (1..=self.n())
            .map(|i| {
                let aff = self.branch_map(i);
                let (a, b) = (aff.apply(&bps[i - 1]), aff.apply(&bps[i]));
                match self.sign {
                    SlopeSign::Positive => Interval {
                        lo: a,
                        hi: b,
                        lo_closed: true,
                        hi_closed: false,
                    },
                    SlopeSign::Negative => Interval {
                        lo: b,
                        hi: a,
                        lo_closed: false,
                        hi_closed: true,
                    },
                }
            })
            .collect();
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut images: Vec<Interval> = Vec::new();
        for piece in pieces {
            if let Some(last) = images.last_mut() {
                let touches = piece.lo < last.hi
                    || (piece.lo == last.hi && (last.hi_closed || piece.lo_closed));
                if touches {
                    match piece.hi.cmp(&last.hi) {
                        Ordering::Greater => {
                            last.hi = piece.hi;
                            last.hi_closed = piece.hi_closed;
                        }
                        Ordering::Equal => last.hi_closed |= piece.hi_closed,
                        Ordering::Less => {}
                    }
                    continue;
                }
            }
            images.push(piece);
        }
        let mut gaps = Vec::new();
        let (mut cursor, mut cursor_closed) = (Rational::zero(), true);
        for img in &images {
            let gap = Interval {
                lo: cursor.clone(),
                hi: img.lo.clone(),
                lo_closed: cursor_closed,
                hi_closed: !img.lo_closed,
            };
            if !gap.is_empty() {
                gaps.push(gap);
            }
            cursor = img.hi.clone();
            cursor_closed = !img.hi_closed;
        }
        let tail = Interval {
            lo: cursor,
            hi: Rational::one(),
            lo_closed: cursor_closed,
            hi_closed: false,
        };
        if !tail.is_empty() {
            gaps.push(tail);
        }
        ImageComponents { images, gaps, exact }
    }

    /// The unique `z` with `f(z) = y`, if any.
    pub fn preimage(&self, y: &Rational) -> Result<Option<Rational>> {
        let inv_slope = self.slope().recip()?;
        for i in 1..=self.n() {
            let z = (y - &self.intercepts[i - 1]) * &inv_slope;
            if z.in_unit_interval() && self.in_branch(&z, i)? {
                return Ok(Some(z));
            }
        }
        Ok(None)
    }

    pub fn describe(&self) -> MapDescription {
        MapDescription {
            beta: self.beta,
            slope_sign: self.sign.as_i8(),
            breakpoints: self.breakpoints.clone(),
            alphas: self.alphas.clone(),
            intercepts: if self.alphas.is_some() {
                None
            } else {
                Some(self.intercepts.clone())
            },
            grid_form: self.in_grid_form(),
        }
    }
}

/// JSON form of a map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapDescription {
    pub beta: u32,
    pub slope_sign: i8,
    pub breakpoints: Vec<RealValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercepts: Option<Vec<Rational>>,
    /// Set on output: false flags a map outside the finiteness hypotheses.
    #[serde(default)]
    pub grid_form: bool,
}

impl MapDescription {
    pub fn build(&self) -> Result<PiecewiseAffineContraction> {
        let sign = SlopeSign::from_i8(self.slope_sign)?;
        match (&self.alphas, &self.intercepts) {
            (Some(a), None) => {
                PiecewiseAffineContraction::grid_form(self.beta, sign, self.breakpoints.clone(), a.clone())
            }
            (None, Some(a)) => {
                PiecewiseAffineContraction::with_intercepts(self.beta, sign, self.breakpoints.clone(), a.clone())
            }
            _ => Err(Error::InvalidMap("give exactly one of alphas or intercepts".into())),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Orbit {
    pub seed: Rational,
    /// `points[k+1] = f(points[k])`.
    pub points: Vec<Rational>,
    /// 1-based branch index of `points[k]`, for each step taken.
    pub branches: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CycleOptions {
    pub max_steps: usize,
    pub max_period: usize,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            max_steps: 10_000,
            max_period: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CycleStatus {
    /// A genuine periodic orbit of `f`; `exact_entry` when the orbit lands on it.
    Cycle { preperiod: usize, exact_entry: bool },
    /// The orbit converges to a periodic pattern whose limit points include a
    /// right endpoint of a branch (possibly 1) that `f` does not map along the
    /// pattern; the limit set is still this finite set.
    BoundaryLimit { preperiod: usize },
    NoCycleWithinBound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleResult {
    pub seed: Rational,
    pub status: CycleStatus,
    /// Cycle (or limit) points in orbit order.
    pub points: Vec<Rational>,
    /// Iterations performed before the decision.
    pub steps: usize,
}

impl CycleResult {
    pub fn is_cycle(&self) -> bool {
        matches!(self.status, CycleStatus::Cycle { .. })
    }

    pub fn found(&self) -> bool {
        !matches!(self.status, CycleStatus::NoCycleWithinBound)
    }

    pub fn preperiod(&self) -> Option<usize> {
        match self.status {
            CycleStatus::Cycle { preperiod, .. } | CycleStatus::BoundaryLimit { preperiod } => Some(preperiod),
            CycleStatus::NoCycleWithinBound => None,
        }
    }

    /// Points sorted ascending, for set comparisons.
    pub fn sorted_points(&self) -> Vec<Rational> {
        let mut v = self.points.clone();
        v.sort();
        v
    }
}

/// The switched-server interval map `f_{d1,d2,d3}`: β = 2, negative slope,
/// α = (1, 2, 1, 2).
pub fn server_map(x1: RealValue, x2: RealValue, x3: RealValue) -> Result<PiecewiseAffineContraction> {
    PiecewiseAffineContraction::grid_form(
        2,
        SlopeSign::Negative,
        vec![Rational::zero().into(), x1, x2, x3, Rational::one().into()],
        vec![1, 2, 1, 2],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{ratio, DigitStream};

    fn r(p: i64, q: i64) -> RealValue {
        ratio(p, q).into()
    }

    pub(crate) fn f111() -> PiecewiseAffineContraction {
        server_map(r(1, 6), r(1, 2), r(5, 6)).unwrap()
    }

    fn two_branch() -> PiecewiseAffineContraction {
        PiecewiseAffineContraction::grid_form(2, SlopeSign::Positive, vec![r(0, 1), r(1, 2), r(1, 1)], vec![1, 2])
            .unwrap()
    }

    fn champernowne_map() -> PiecewiseAffineContraction {
        let c = DigitStream::champernowne(4).unwrap();
        server_map(
            c.offset_add(&ratio(-1, 4)).unwrap().into(),
            c.clone().into(),
            c.offset_add(&ratio(1, 2)).unwrap().into(),
        )
        .unwrap()
    }

    #[test]
    fn builds_server_map() {
        let f = f111();
        assert_eq!(f.n(), 4);
        assert_eq!(f.alphas(), Some(&[1, 2, 1, 2][..]));
        assert_eq!(f.intercepts()[0], ratio(1, 2));
        assert_eq!(f.intercepts()[1], ratio(1, 1));
        assert!(f.is_exact());
    }

    #[test]
    fn rejects_alpha_one_equal_beta_for_negative_slope() {
        let err = PiecewiseAffineContraction::grid_form(
            2,
            SlopeSign::Negative,
            vec![r(0, 1), r(1, 2), r(1, 1)],
            vec![2, 1],
        );
        assert!(matches!(err, Err(Error::InvalidMap(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        let bp = vec![r(0, 1), r(1, 2), r(1, 1)];
        assert!(PiecewiseAffineContraction::grid_form(2, SlopeSign::Positive, bp.clone(), vec![1, 3]).is_err());
        assert!(PiecewiseAffineContraction::grid_form(
            2,
            SlopeSign::Positive,
            vec![r(0, 1), r(1, 2), r(1, 3), r(1, 1)],
            vec![1, 2, 1]
        )
        .is_err());
        assert!(PiecewiseAffineContraction::grid_form(2, SlopeSign::Positive, vec![r(0, 1), r(1, 1)], vec![1]).is_err());
        // intercept 3/4 pushes x/2 + 3/4 past 1
        assert!(PiecewiseAffineContraction::with_intercepts(2, SlopeSign::Positive, bp.clone(), vec![ratio(0, 1), ratio(3, 4)])
            .is_err());
        // a general map on the grid is recognized as grid form
        let g = PiecewiseAffineContraction::with_intercepts(2, SlopeSign::Positive, bp.clone(), vec![ratio(0, 1), ratio(1, 2)])
            .unwrap();
        assert_eq!(g.alphas(), Some(&[1, 2][..]));
        let h = PiecewiseAffineContraction::with_intercepts(2, SlopeSign::Positive, bp, vec![ratio(1, 8), ratio(1, 3)])
            .unwrap();
        assert!(!h.in_grid_form());
    }

    #[test]
    fn two_branch_formulas() {
        let f = two_branch();
        assert_eq!(f.evaluate(&ratio(1, 4)).unwrap(), ratio(1, 8));
        assert_eq!(f.evaluate(&ratio(3, 4)).unwrap(), ratio(7, 8));
    }

    #[test]
    fn evaluates_server_map() {
        let f = f111();
        assert_eq!(f.evaluate(&ratio(0, 1)).unwrap(), ratio(1, 2));
        assert_eq!(f.evaluate(&ratio(1, 2)).unwrap(), ratio(1, 4));
        let g = champernowne_map();
        assert_eq!(g.evaluate(&ratio(13, 15)).unwrap(), ratio(1, 15));
        assert!(!g.is_exact());
    }

    #[test]
    fn branch_lookup() {
        let f = f111();
        assert_eq!(f.branch_of(&ratio(1, 6)).unwrap(), 2);
        assert_eq!(f.branch_of(&ratio(17, 100)).unwrap(), 2);
        assert_eq!(f.branch_of(&ratio(0, 1)).unwrap(), 1);
        assert_eq!(f.branch_of(&ratio(99, 100)).unwrap(), 4);
        assert!(f.branch_of(&ratio(1, 1)).is_err());
        assert_eq!(champernowne_map().branch_of(&ratio(13, 15)).unwrap(), 3);
    }

    #[test]
    fn deferred_stream_image() {
        let g = champernowne_map();
        let c = DigitStream::champernowne(4).unwrap();
        let x: RealValue = c.offset_add(&ratio(1, 4)).unwrap().into();
        match g.evaluate_real(&x).unwrap() {
            Image::Deferred { branch, .. } => assert_eq!(branch, 3),
            Image::Exact(_) => panic!("stream image should stay symbolic"),
        }
        // a breakpoint compares equal to itself
        assert_eq!(g.branch_of_real(&g.breakpoints()[2]).unwrap(), 3);
        // an equal value held by a different stream object cannot be placed
        let fresh: RealValue = c.into();
        assert!(matches!(g.branch_of_real(&fresh), Err(Error::Undecidable { .. })));
    }

    #[test]
    fn orbits() {
        let f = f111();
        let o = f.forward_orbit(&ratio(0, 1), 4).unwrap();
        assert_eq!(o.points, vec![ratio(0, 1), ratio(1, 2), ratio(1, 4), ratio(7, 8), ratio(9, 16)]);
        assert_eq!(o.branches, vec![1, 3, 2, 4]);
        let g = two_branch();
        let o = g.forward_orbit(&ratio(1, 3), 3).unwrap();
        assert_eq!(o.points, vec![ratio(1, 3), ratio(1, 6), ratio(1, 12), ratio(1, 24)]);
        let fixed = g.forward_orbit(&ratio(0, 1), 5).unwrap();
        assert!(fixed.points.iter().all(|p| p.is_zero()));
    }

    #[test]
    fn cycle_of_server_map() {
        let res = f111().detect_cycle(&ratio(0, 1), 100).unwrap();
        assert!(res.is_cycle());
        assert_eq!(res.sorted_points(), vec![ratio(2, 9), ratio(5, 9), ratio(8, 9)]);
        assert!(res.preperiod().unwrap() > 0);
    }

    #[test]
    fn cycle_at_zero() {
        let res = two_branch().detect_cycle(&ratio(1, 3), 100).unwrap();
        assert_eq!(res.points, vec![ratio(0, 1)]);
        assert!(res.is_cycle());
    }

    #[test]
    fn boundary_limit_at_one() {
        let res = two_branch().detect_cycle(&ratio(2, 3), 100).unwrap();
        assert_eq!(res.status, CycleStatus::BoundaryLimit { preperiod: 0 });
        assert_eq!(res.points, vec![ratio(1, 1)]);
    }

    #[test]
    fn exact_revisit() {
        let f = f111();
        let res = f.detect_cycle(&ratio(2, 9), 10).unwrap();
        assert_eq!(
            res.status,
            CycleStatus::Cycle {
                preperiod: 0,
                exact_entry: true
            }
        );
        assert_eq!(res.points, vec![ratio(2, 9), ratio(8, 9), ratio(5, 9)]);
    }

    #[test]
    fn champernowne_four_cycle() {
        let g = champernowne_map();
        let res = g.detect_cycle(&ratio(13, 15), 200).unwrap();
        assert!(res.is_cycle());
        assert_eq!(res.points, vec![ratio(13, 15), ratio(1, 15), ratio(7, 15), ratio(4, 15)]);
    }

    #[test]
    fn cycle_bound_reported() {
        let res = f111().detect_cycle(&ratio(0, 1), 2).unwrap();
        assert_eq!(res.status, CycleStatus::NoCycleWithinBound);
    }

    #[test]
    fn image_gaps_two_branch() {
        let comps = two_branch().image_components();
        assert_eq!(comps.gaps.len(), 1);
        let g = &comps.gaps[0];
        assert_eq!((g.lo.clone(), g.hi.clone()), (ratio(1, 4), ratio(3, 4)));
        assert!(g.lo_closed && !g.hi_closed);
        assert_eq!(comps.max_gap(), ratio(1, 2));
        assert_eq!(comps.image_measure(), ratio(1, 2));
    }

    #[test]
    fn image_gaps_server_map() {
        let comps = f111().image_components();
        let spans: Vec<_> = comps.gaps.iter().map(|g| (g.lo.clone(), g.hi.clone())).collect();
        assert_eq!(
            spans,
            vec![
                (ratio(0, 1), ratio(1, 12)),
                (ratio(1, 4), ratio(5, 12)),
                (ratio(7, 12), ratio(3, 4)),
                (ratio(11, 12), ratio(1, 1)),
            ]
        );
        assert!(comps.gaps[0].hi_closed);
        assert!(comps.in_gap(&ratio(2, 3)));
        assert!(comps.in_image(&ratio(1, 2)));
        assert!(comps.max_gap() >= ratio(1, 10));
        assert_eq!(comps.image_measure(), ratio(1, 2));
    }

    #[test]
    fn preimages() {
        let f = f111();
        assert_eq!(f.preimage(&ratio(1, 6)).unwrap(), Some(ratio(2, 3)));
        assert_eq!(f.preimage(&ratio(2, 3)).unwrap(), None);
        assert_eq!(two_branch().preimage(&ratio(1, 2)).unwrap(), None);
        assert_eq!(two_branch().preimage(&ratio(1, 8)).unwrap(), Some(ratio(1, 4)));
    }

    #[test]
    fn map_json_round_trip() {
        let f = f111();
        let js = serde_json::to_string(&f.describe()).unwrap();
        let back: MapDescription = serde_json::from_str(&js).unwrap();
        let g = back.build().unwrap();
        assert_eq!(g.intercepts(), f.intercepts());
    }
}
