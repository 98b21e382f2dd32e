//! The three-tank switched server.
//!
//! Work arrives in each tank at rate 1/3; a single server empties one tank at
//! rate 1 (net rate 2/3). When the served tank runs dry the server moves to
//! the tank `j` with the largest scaled volume `d_ij v_j`. The phase space is
//! the simplex `v1 + v2 + v3 = 1` and the dynamics reduce to the Poincaré
//! map `F` on its boundary, which the arc-length parametrisation `phi`
//! conjugates to a three-breakpoint interval map.
//!
//! Tanks are numbered 1, 2, 3. States are always exact rationals. Parameters
//! may be exact or derived from stream breakpoints; in the latter case each
//! switching decision compares a rational threshold with a breakpoint
//! enclosure of configurable precision and fails loudly when the enclosure is
//! too coarse.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::contraction::{server_map, PiecewiseAffineContraction};
use crate::exactnum::{compare, ratio, Rational, RealValue, DEFAULT_COMPARE_DIGITS};
use crate::{Error, Result};

/// Default number of stream digits used for switching decisions.
pub const DEFAULT_DIGITS: usize = 60;

/// A point of the simplex `v1 + v2 + v3 = 1`, all coordinates non-negative.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimplexState {
    v: [Rational; 3],
}

impl SimplexState {
    pub fn new(v1: Rational, v2: Rational, v3: Rational) -> Result<Self> {
        let v = [v1, v2, v3];
        if v.iter().any(Rational::is_negative) {
            return Err(Error::OutOfRange(format!("negative tank volume in {v:?}")));
        }
        let sum = &(&v[0] + &v[1]) + &v[2];
        if sum != Rational::one() {
            return Err(Error::OutOfRange(format!("volumes sum to {sum}, not 1")));
        }
        Ok(SimplexState { v })
    }

    pub fn from_array(v: [Rational; 3]) -> Result<Self> {
        let [a, b, c] = v;
        Self::new(a, b, c)
    }

    /// Volume of tank `i` (1-based).
    pub fn v(&self, i: usize) -> &Rational {
        &self.v[i - 1]
    }

    pub fn volumes(&self) -> &[Rational; 3] {
        &self.v
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.v[0].to_f64(), self.v[1].to_f64(), self.v[2].to_f64()]
    }

    pub fn is_boundary(&self) -> bool {
        self.v.iter().any(Rational::is_zero)
    }

    /// The emptied tank of a boundary state: the lowest-indexed zero.
    pub fn emptied(&self) -> Option<usize> {
        self.v.iter().position(Rational::is_zero).map(|i| i + 1)
    }

    /// Largest coordinate difference, as a float.
    pub fn distance(&self, other: &SimplexState) -> f64 {
        (0..3)
            .map(|i| (&self.v[i] - &other.v[i]).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for SimplexState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.v[0], self.v[1], self.v[2])
    }
}

impl fmt::Display for SimplexState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One switching ratio `d_i`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DParam {
    Exact(Rational),
    /// Irrational `d_i`, kept as the breakpoint `x_i` it came from.
    FromBreakpoint(RealValue),
}

/// The three ratios `d1 = d13/d12`, `d2 = d21/d23`, `d3 = d32/d31`.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct DTriple {
    pub d: [DParam; 3],
}

fn third() -> Rational {
    ratio(1, 3)
}

/// Open interval `((i-1)/3, i/3)` that breakpoint `x_i` must lie in.
fn breakpoint_range(i: usize) -> (Rational, Rational) {
    (ratio(i as i64 - 1, 3), ratio(i as i64, 3))
}

/// `d_i` as a function of `x_i`; decreasing on its range.
fn d_of_x(i: usize, x: &Rational) -> Result<Rational> {
    let three = Rational::from_integer(3);
    let three_x = &three * x;
    let k = Rational::from_integer(i as i64 - 1);
    // d_i = (i - 3x) / (3x - (i - 1))
    let num = Rational::from_integer(i as i64) - &three_x;
    let den = &three_x - &k;
    if den.is_zero() {
        return Err(Error::OutOfRange(format!("x{i} = {x} on the edge of its range")));
    }
    Ok(num / den)
}

/// `x_i = 1/(3(1 + d_i)) + (i-1)/3`.
fn x_of_d(i: usize, d: &Rational) -> Rational {
    let one = Rational::one();
    let three = Rational::from_integer(3);
    (&three * &(&one + d)).recip().expect("d > 0") + Rational::from_integer(i as i64 - 1) * third()
}

fn exact_value(x: &RealValue) -> Option<Rational> {
    match x {
        RealValue::Rational(r) => Some(r.clone()),
        RealValue::Stream(s) => s.rational_value(),
    }
}

impl DParam {
    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            DParam::Exact(r) => Some(r),
            DParam::FromBreakpoint(_) => None,
        }
    }

    /// Rational bounds on `d_i` (the `i`-th ratio) from `digits` stream digits.
    pub fn enclosure(&self, i: usize, digits: usize) -> Result<(Rational, Rational)> {
        match self {
            DParam::Exact(r) => Ok((r.clone(), r.clone())),
            DParam::FromBreakpoint(x) => {
                let (lo, hi) = x.enclosure(digits);
                let (a, b) = breakpoint_range(i);
                if lo <= a || hi >= b {
                    return Err(Error::PrecisionExhausted(format!(
                        "{digits} digits cannot separate x{i} from the edge of its range"
                    )));
                }
                Ok((d_of_x(i, &hi)?, d_of_x(i, &lo)?))
            }
        }
    }

    pub fn approx(&self, i: usize, digits: usize) -> Result<f64> {
        let (lo, hi) = self.enclosure(i, digits)?;
        Ok(((lo + hi) / Rational::from_integer(2)).to_f64())
    }
}

impl DTriple {
    pub fn exact(d1: Rational, d2: Rational, d3: Rational) -> Result<Self> {
        for (i, d) in [&d1, &d2, &d3].into_iter().enumerate() {
            if !d.is_positive() {
                return Err(Error::OutOfRange(format!("d{} = {d} must be positive", i + 1)));
            }
        }
        Ok(DTriple {
            d: [DParam::Exact(d1), DParam::Exact(d2), DParam::Exact(d3)],
        })
    }

    pub fn is_exact(&self) -> bool {
        self.d.iter().all(|p| p.as_exact().is_some())
    }

    /// Float approximations, for display.
    pub fn approx(&self, digits: usize) -> Result<[f64; 3]> {
        Ok([self.d[0].approx(1, digits)?, self.d[1].approx(2, digits)?, self.d[2].approx(3, digits)?])
    }
}

/// Converts breakpoints `x_i` of the interval map into the switching ratios.
pub fn d_from_x(x: [RealValue; 3]) -> Result<DTriple> {
    let mut out = Vec::with_capacity(3);
    for (k, xi) in x.into_iter().enumerate() {
        let i = k + 1;
        let (a, b) = breakpoint_range(i);
        let above = compare(&xi, &a.clone().into(), DEFAULT_COMPARE_DIGITS)?.is_gt();
        let below = compare(&xi, &b.clone().into(), DEFAULT_COMPARE_DIGITS)?.is_lt();
        if !(above && below) {
            return Err(Error::OutOfRange(format!("x{i} = {xi} outside ({a}, {b})")));
        }
        out.push(match exact_value(&xi) {
            Some(r) => DParam::Exact(d_of_x(i, &r)?),
            None => DParam::FromBreakpoint(xi),
        });
    }
    Ok(DTriple {
        d: out.try_into().expect("three entries"),
    })
}

/// Breakpoints `x_i = 1/(3(1 + d_i)) + (i-1)/3`, the exact inverse of [`d_from_x`].
pub fn breakpoints_from_d(d: &DTriple) -> [RealValue; 3] {
    let x = |i: usize| match &d.d[i - 1] {
        DParam::Exact(r) => RealValue::Rational(x_of_d(i, r)),
        DParam::FromBreakpoint(x) => x.clone(),
    };
    [x(1), x(2), x(3)]
}

/// The interval map conjugate to the Poincaré map.
pub fn interval_map(d: &DTriple) -> Result<PiecewiseAffineContraction> {
    let [x1, x2, x3] = breakpoints_from_d(d);
    server_map(x1, x2, x3)
}

/// Resolution of exact ties `d_i v_j = v_k` in the switching rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// The lower tank index wins.
    #[default]
    LowerIndex,
    /// Ties go to the tank that keeps `F` conjugate to the half-open interval
    /// map at its breakpoints (1 -> 3, 2 -> 1, 3 -> 2).
    Conjugate,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimOptions {
    /// Stream digits used for each switching decision.
    pub digits: usize,
    pub tie: TieBreak,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            digits: DEFAULT_DIGITS,
            tie: TieBreak::LowerIndex,
        }
    }
}

/// Candidate tanks after tank `i` empties: `(forward, other)` where forward
/// is chosen when `d_i v_forward > v_other`.
fn candidates(i: usize) -> (usize, usize) {
    match i {
        1 => (3, 2),
        2 => (1, 3),
        _ => (2, 1),
    }
}

/// Tank served next after `emptied` runs dry.
pub fn switch_target(state: &SimplexState, emptied: usize, d: &DTriple, opts: &SimOptions) -> Result<usize> {
    if !(1..=3).contains(&emptied) {
        return Err(Error::InvalidArgument(format!("no tank {emptied}")));
    }
    if !state.v(emptied).is_zero() {
        return Err(Error::InvalidArgument(format!(
            "tank {emptied} is not empty in {state}"
        )));
    }
    let (fwd, other) = candidates(emptied);
    let order = match &d.d[emptied - 1] {
        DParam::Exact(di) => (di * state.v(fwd)).cmp(state.v(other)),
        DParam::FromBreakpoint(x) => {
            // d_i v_fwd > v_other  <=>  x_i < (i - 1 + v_fwd) / 3
            let thr = (Rational::from_integer(emptied as i64 - 1) + state.v(fwd)) * third();
            match exact_value(x) {
                Some(xr) => thr.cmp(&xr),
                None => {
                    let (lo, hi) = x.enclosure(opts.digits);
                    if thr >= hi {
                        std::cmp::Ordering::Greater
                    } else if thr < lo {
                        std::cmp::Ordering::Less
                    } else {
                        return Err(Error::PrecisionExhausted(format!(
                            "switching threshold {thr} lies within {} digits of x{emptied}",
                            opts.digits
                        )));
                    }
                }
            }
        }
    };
    Ok(match order {
        std::cmp::Ordering::Greater => fwd,
        std::cmp::Ordering::Less => other,
        std::cmp::Ordering::Equal => match opts.tie {
            TieBreak::LowerIndex => fwd.min(other),
            TieBreak::Conjugate => fwd,
        },
    })
}

/// Serves tank `served` until it is empty. Returns the new state and the
/// elapsed time `(3/2) v_served`.
pub fn drain_step(state: &SimplexState, served: usize) -> Result<(SimplexState, Rational)> {
    if !(1..=3).contains(&served) {
        return Err(Error::InvalidArgument(format!("no tank {served}")));
    }
    let vs = state.v(served).clone();
    if vs.is_zero() {
        return Err(Error::InvalidArgument(format!("tank {served} is already empty")));
    }
    let half = &vs * &ratio(1, 2);
    let mut v = state.v.clone();
    for (k, slot) in v.iter_mut().enumerate() {
        if k + 1 == served {
            *slot = Rational::zero();
        } else {
            *slot = &*slot + &half;
        }
    }
    Ok((SimplexState { v }, vs * ratio(3, 2)))
}

/// One event of the flow between boundary hits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segment {
    pub start_time: Rational,
    pub start: SimplexState,
    pub served: usize,
    pub duration: Rational,
    pub end: SimplexState,
}

pub fn poincare_segment(state: &SimplexState, d: &DTriple, opts: &SimOptions, start_time: Rational) -> Result<Segment> {
    let emptied = state
        .emptied()
        .ok_or_else(|| Error::InvalidArgument(format!("{state} is not on the boundary")))?;
    let served = switch_target(state, emptied, d, opts)?;
    let (end, duration) = drain_step(state, served)?;
    Ok(Segment {
        start_time,
        start: state.clone(),
        served,
        duration,
        end,
    })
}

/// The Poincaré map `F` on the boundary of the simplex.
pub fn poincare(state: &SimplexState, d: &DTriple, opts: &SimOptions) -> Result<SimplexState> {
    Ok(poincare_segment(state, d, opts, Rational::zero())?.end)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
}

/// A point on the piecewise-linear path, exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub t: Rational,
    pub v: [Rational; 3],
    pub served: usize,
}

impl Trajectory {
    pub fn states(&self) -> impl Iterator<Item = &SimplexState> {
        self.segments
            .first()
            .map(|s| &s.start)
            .into_iter()
            .chain(self.segments.iter().map(|s| &s.end))
    }

    pub fn final_state(&self) -> Option<&SimplexState> {
        self.segments.last().map(|s| &s.end)
    }

    /// Cumulative times of the boundary hits.
    pub fn event_times(&self) -> Vec<Rational> {
        self.segments.iter().map(|s| &s.start_time + &s.duration).collect()
    }

    /// The first exactly repeated state and the cycle it closes, if any.
    pub fn exact_cycle(&self) -> Option<Vec<SimplexState>> {
        let states: Vec<&SimplexState> = self.states().collect();
        for (j, s) in states.iter().enumerate() {
            if let Some(i) = states[..j].iter().position(|p| p == s) {
                return Some(states[i..j].iter().map(|s| (*s).clone()).collect());
            }
        }
        None
    }

    /// `per_segment` evenly spaced points on each segment plus the final state.
    pub fn samples(&self, per_segment: usize) -> Vec<Sample> {
        let per = per_segment.max(1) as i64;
        let mut out = Vec::with_capacity(self.segments.len() * per as usize + 1);
        for seg in &self.segments {
            for j in 0..per {
                let s = ratio(j, per);
                out.push(Sample {
                    t: &seg.start_time + &(&s * &seg.duration),
                    v: [1, 2, 3].map(|k| seg.start.v(k) + &(&s * &(seg.end.v(k) - seg.start.v(k)))),
                    served: seg.served,
                });
            }
        }
        if let Some(last) = self.segments.last() {
            out.push(Sample {
                t: &last.start_time + &last.duration,
                v: last.end.volumes().clone(),
                served: last.served,
            });
        }
        out
    }

    /// CSV with columns `t,v1,v2,v3,served_tank`, values truncated to
    /// `digits` decimals.
    pub fn write_csv<W: Write>(&self, per_segment: usize, digits: usize, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,v1,v2,v3,served_tank")?;
        for s in self.samples(per_segment) {
            let [a, b, c] = s.v.map(|x| x.to_decimal_string(digits));
            writeln!(w, "{},{a},{b},{c},{}", s.t.to_decimal_string(digits), s.served)?;
        }
        Ok(())
    }
}

/// Runs `n_events` switching events from `v0`. Boundary starts follow the
/// switching rule; interior starts need the tank being served initially.
pub fn trajectory(
    v0: &SimplexState,
    d: &DTriple,
    n_events: usize,
    initial_served: Option<usize>,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let mut segments = Vec::with_capacity(n_events);
    let mut state = v0.clone();
    let mut time = Rational::zero();
    for k in 0..n_events {
        let seg = match (k, initial_served) {
            (0, Some(served)) => {
                let (end, duration) = drain_step(&state, served)?;
                Segment {
                    start_time: time.clone(),
                    start: state.clone(),
                    served,
                    duration,
                    end,
                }
            }
            (0, None) if !state.is_boundary() => {
                return Err(Error::InvalidArgument(format!(
                    "interior start {state} needs an initially served tank"
                )))
            }
            _ => poincare_segment(&state, d, opts, time.clone())?,
        };
        time = &seg.start_time + &seg.duration;
        state = seg.end.clone();
        segments.push(seg);
    }
    Ok(Trajectory { segments })
}

/// Anticlockwise arc-length parametrisation of the boundary, starting at
/// `e2` and passing `e3` at 1/3 and `e1` at 2/3.
pub fn phi(t: &Rational) -> Result<SimplexState> {
    if !t.in_unit_interval() {
        return Err(Error::OutOfRange(format!("phi needs t in [0,1), got {t}")));
    }
    let one = Rational::one();
    let two = Rational::from_integer(2);
    let three = Rational::from_integer(3);
    let t3 = &three * t;
    let v = if *t < third() {
        [Rational::zero(), &one - &t3, t3]
    } else if *t < ratio(2, 3) {
        [&t3 - &one, Rational::zero(), &two - &t3]
    } else {
        [&three - &t3, &t3 - &two, Rational::zero()]
    };
    SimplexState::from_array(v)
}

/// Inverse of [`phi`] on the boundary.
pub fn phi_inv(state: &SimplexState) -> Result<Rational> {
    let one = Rational::one();
    let [v1, v2, v3] = &state.v;
    if v1.is_zero() && *v3 < one {
        Ok(v3 * &third())
    } else if v2.is_zero() && *v1 < one {
        Ok((v1 + &one) * third())
    } else if v3.is_zero() {
        Ok((Rational::from_integer(3) - v1) * third())
    } else {
        Err(Error::InvalidArgument(format!("{state} is not on the boundary")))
    }
}

/// `phi^-1(F(phi(t)))`, the Poincaré map read on `[0, 1)`.
pub fn boundary_map(t: &Rational, d: &DTriple, opts: &SimOptions) -> Result<Rational> {
    phi_inv(&poincare(&phi(t)?, d, opts)?)
}

/// Largest `|phi^-1(F(phi(t))) - f(t)|` over the samples.
pub fn conjugacy_residual(d: &DTriple, samples: &[Rational], opts: &SimOptions) -> Result<Rational> {
    let f = interval_map(d)?;
    let mut worst = Rational::zero();
    for t in samples {
        let r = (boundary_map(t, d, opts)? - f.evaluate(t)?).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// A discontinuity of the boundary map located to a small bracket.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocatedJump {
    pub lo: Rational,
    pub hi: Rational,
    pub approx: f64,
}

/// Bracket width reached by [`empirical_breakpoints`].
pub const JUMP_WIDTH: f64 = 1e-12;

/// Finds the discontinuities of `phi^-1 ∘ F ∘ phi` by scanning a grid of
/// `resolution` cells and bisecting each suspicious cell. Inside a branch
/// the map moves by exactly half the step, so any other change is a jump.
pub fn empirical_breakpoints(d: &DTriple, resolution: usize, opts: &SimOptions) -> Result<Vec<LocatedJump>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    let g = |t: &Rational| boundary_map(t, d, opts);
    let smooth = |a: &Rational, ga: &Rational, b: &Rational, gb: &Rational| {
        (ga - gb).abs() * Rational::from_integer(2) == (b - a).abs()
    };
    let width = Rational::new(1, 1_000_000_000_000i64)?;
    let res = resolution as i64;
    let mut jumps = Vec::new();
    let mut prev_t = Rational::zero();
    let mut prev_g = g(&prev_t)?;
    for k in 1..res {
        let t = ratio(k, res);
        let gt = g(&t)?;
        if !smooth(&prev_t, &prev_g, &t, &gt) {
            let (mut lo, mut glo, mut hi) = (prev_t.clone(), prev_g.clone(), t.clone());
            while &hi - &lo > width {
                let mid = (&lo + &hi) * ratio(1, 2);
                let gm = g(&mid)?;
                if smooth(&lo, &glo, &mid, &gm) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            let approx = ((&lo + &hi) * ratio(1, 2)).to_f64();
            jumps.push(LocatedJump { lo, hi, approx });
        }
        prev_t = t;
        prev_g = gt;
    }
    if jumps.len() != 3 {
        return Err(Error::Anomaly(format!(
            "expected 3 discontinuities, found {} at {:?}",
            jumps.len(),
            jumps.iter().map(|j| j.approx).collect::<Vec<_>>()
        )));
    }
    Ok(jumps)
}
