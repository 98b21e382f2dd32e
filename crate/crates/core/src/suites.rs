//! Seeded property suites for the identities the library relies on.
//!
//! Each suite draws its inputs from a ChaCha RNG with a recorded seed, so a
//! report can be replayed exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::betadyn::{backward_equals_transform, square_identity_check, ChainEnd};
use crate::contraction::{CycleOptions, PiecewiseAffineContraction, SlopeSign};
use crate::exactnum::{ratio, DigitStream, Rational, RealValue};
use crate::quasipart::{analyze, Verdict, DEFAULT_MAX_DEPTH};
use crate::serversim::{breakpoints_from_d, conjugacy_residual, d_from_x, DTriple, SimOptions};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_240_601;

pub const SUITE_NAMES: [&str; 7] = [
    "lemma-square",
    "backward-orbit",
    "roundtrip",
    "conjugacy",
    "gap-bound",
    "positive-slope",
    "negative-slope",
];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub seed: u64,
    pub checks: u64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str, seed: u64) -> Self {
        SuiteReport {
            name: name.into(),
            seed,
            checks: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn record<T>(&mut self, r: Result<T>, what: impl FnOnce() -> String) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks += 1;
                self.failures.push(format!("{}: {e}", what()));
                None
            }
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `p/q` uniform over `q ∈ [1, max_denom]`, `p ∈ [0, q)`.
pub fn random_rational<R: Rng>(rng: &mut R, max_denom: i64) -> Rational {
    let q = rng.gen_range(1..=max_denom);
    ratio(rng.gen_range(0..q), q)
}

/// Rational in the open interval `(lo, hi)` with denominator at most `max_denom`.
pub fn random_rational_in<R: Rng>(rng: &mut R, lo: &Rational, hi: &Rational, max_denom: i64) -> Rational {
    loop {
        let x = lo + &(&(hi - lo) * &random_rational(rng, max_denom));
        if x > *lo && x < *hi {
            return x;
        }
    }
}

/// A random map in grid form with `n` branches and rational breakpoints.
pub fn random_grid_map<R: Rng>(
    rng: &mut R,
    beta: u32,
    n: usize,
    sign: SlopeSign,
    max_denom: i64,
) -> Result<PiecewiseAffineContraction> {
    let mut cuts: Vec<Rational> = Vec::with_capacity(n + 1);
    while cuts.len() < n - 1 {
        let x = random_rational(rng, max_denom);
        if x.is_positive() && !cuts.contains(&x) {
            cuts.push(x);
        }
    }
    cuts.push(Rational::zero());
    cuts.push(Rational::one());
    cuts.sort();
    let mut alphas: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=beta)).collect();
    if sign == SlopeSign::Negative {
        while alphas[0] == beta {
            alphas[0] = rng.gen_range(1..=beta);
        }
    }
    let bps: Vec<RealValue> = cuts.into_iter().map(RealValue::from).collect();
    PiecewiseAffineContraction::grid_form(beta, sign, bps, alphas)
}

fn random_map_family<R: Rng>(rng: &mut R, betas: &[u32], ns: std::ops::RangeInclusive<usize>, sign: SlopeSign, max_denom: i64) -> Result<PiecewiseAffineContraction> {
    let beta = *betas.choose(rng).expect("non-empty");
    let n = rng.gen_range(ns);
    random_grid_map(rng, beta, n, sign, max_denom)
}

fn label(f: &PiecewiseAffineContraction) -> String {
    serde_json::to_string(&f.describe()).unwrap_or_else(|_| "<map>".into())
}

/// `(T_{-β})² = T_{β²}` on `per_beta` random rationals for each β in 2..=5.
pub fn lemma_square(seed: u64, per_beta: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("lemma-square", seed);
    let mut rng = rng(seed);
    for beta in 2..=5u32 {
        for _ in 0..per_beta {
            let x = random_rational(&mut rng, 10_000);
            if let Some(ok) = rep.record(square_identity_check(&x, beta), || format!("x={x} beta={beta}")) {
                rep.check(ok, || format!("identity fails at x={x} beta={beta}"));
            }
        }
    }
    rep
}

/// All `z ∈ [0,1)` with `f(z) = y`, found branch by branch from the image
/// intervals rather than from the domain test used by `preimage`.
pub fn preimage_oracle(f: &PiecewiseAffineContraction, y: &Rational) -> Vec<Rational> {
    let bps = f.rational_breakpoints().expect("rational map");
    let mut out = Vec::new();
    for i in 1..=f.n() {
        let aff = f.branch_map(i);
        let (at_lo, at_hi) = (aff.apply(&bps[i - 1]), aff.apply(&bps[i]));
        // the image of [x_{i-1}, x_i) contains f(x_{i-1}) but not f(x_i)
        let inside = if at_lo < at_hi {
            *y >= at_lo && *y < at_hi
        } else {
            *y <= at_lo && *y > at_hi
        };
        if inside {
            out.push((y - &aff.intercept) / &aff.slope);
        }
    }
    out
}

/// Iterated preimages of every interior breakpoint against the β-transform
/// orbit and the preimage oracle, on `maps` random maps of each sign.
pub fn backward_orbit(seed: u64, maps: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("backward-orbit", seed);
    let mut rng = rng(seed);
    for k in 0..2 * maps {
        let sign = if k % 2 == 0 { SlopeSign::Positive } else { SlopeSign::Negative };
        let Some(f) = rep.record(random_map_family(&mut rng, &[2, 3, 4], 2..=5, sign, 50), || "map".into()) else {
            continue;
        };
        let bps = f.rational_breakpoints().expect("rational");
        for x in &bps[1..bps.len() - 1] {
            let Some(br) = rep.record(backward_equals_transform(&f, x, DEFAULT_MAX_DEPTH), || {
                format!("{} from {x}", label(&f))
            }) else {
                continue;
            };
            for (j, y) in br.chain.iter().enumerate() {
                let pre = preimage_oracle(&f, y);
                rep.check(pre.len() <= 1, || format!("{}: {y} has {} preimages", label(&f), pre.len()));
                match br.chain.get(j + 1) {
                    Some(z) => rep.check(pre.first() == Some(z), || {
                        format!("{}: oracle preimage of {y} is {pre:?}, chain has {z}", label(&f))
                    }),
                    None if br.end == ChainEnd::Dead => rep.check(pre.is_empty() && br.death_point_in_gap, || {
                        format!("{}: chain died at {y} but oracle gives {pre:?}", label(&f))
                    }),
                    None => {}
                }
            }
            rep.check(br.end != ChainEnd::DepthExceeded, || format!("{}: chain from {x} too deep", label(&f)));
        }
    }
    rep
}

fn random_x_triple<R: Rng>(rng: &mut R) -> [Rational; 3] {
    [1, 2, 3].map(|i| random_rational_in(rng, &ratio(i - 1, 3), &ratio(i, 3), 1000))
}

fn random_d_triple<R: Rng>(rng: &mut R) -> DTriple {
    let mut d = || ratio(rng.gen_range(1..=50), rng.gen_range(1..=50));
    DTriple::exact(d(), d(), d()).expect("positive")
}

/// `breakpoints_from_d ∘ d_from_x` and the reverse composition on random
/// rational inputs.
pub fn roundtrip(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("roundtrip", seed);
    let mut rng = rng(seed);
    for _ in 0..count {
        let x = random_x_triple(&mut rng);
        if let Some(d) = rep.record(d_from_x(x.clone().map(RealValue::from)), || format!("x={x:?}")) {
            let back = breakpoints_from_d(&d);
            let ok = back.iter().zip(&x).all(|(b, x)| b.as_rational() == Some(x));
            rep.check(ok, || format!("x={x:?} came back as {back:?}"));
        }
        let d = random_d_triple(&mut rng);
        let x = breakpoints_from_d(&d);
        if let Some(d2) = rep.record(d_from_x(x), || format!("d={d:?}")) {
            let ok = d2.d.iter().zip(&d.d).all(|(a, b)| a.as_exact() == b.as_exact());
            rep.check(ok, || format!("d={d:?} came back as {d2:?}"));
        }
    }
    rep
}

/// The Champernowne parameters `x = (c - 1/4, c, c + 1/2)` with `c` the
/// base-4 Champernowne number.
pub fn champernowne_d() -> Result<DTriple> {
    let c = DigitStream::champernowne(4)?;
    d_from_x([
        c.offset_add(&ratio(-1, 4))?.into(),
        c.clone().into(),
        c.offset_add(&ratio(1, 2))?.into(),
    ])
}

/// Conjugacy residual on `triples` random rational d's and on the
/// Champernowne parameters, `samples` points each.
pub fn conjugacy(seed: u64, triples: usize, samples: usize, opts: &SimOptions) -> SuiteReport {
    let mut rep = SuiteReport::new("conjugacy", seed);
    let mut rng = rng(seed);
    let mut ds: Vec<DTriple> = (0..triples).map(|_| random_d_triple(&mut rng)).collect();
    if let Some(d) = rep.record(champernowne_d(), || "champernowne parameters".into()) {
        ds.push(d);
    }
    for d in &ds {
        let ts: Vec<Rational> = (0..samples).map(|_| random_rational(&mut rng, 10_000)).collect();
        if let Some(r) = rep.record(conjugacy_residual(d, &ts, opts), || format!("d={d:?}")) {
            rep.check(r.is_zero(), || format!("d={d:?}: residual {r}"));
        }
    }
    rep
}

/// Largest image gap at least `(1 - 1/β)/(n + 1)` on random maps.
pub fn gap_bound(seed: u64, maps: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("gap-bound", seed);
    let mut rng = rng(seed);
    for k in 0..maps {
        let sign = if k % 2 == 0 { SlopeSign::Positive } else { SlopeSign::Negative };
        let Some(f) = rep.record(random_map_family(&mut rng, &[2, 3, 4, 5], 2..=6, sign, 50), || "map".into()) else {
            continue;
        };
        let beta = Rational::from_integer(f.beta());
        let bound = (Rational::one() - beta.recip().expect("beta > 0")) / Rational::from_integer(f.n() as i64 + 1);
        let gap = f.image_components().max_gap();
        rep.check(gap >= bound, || format!("{}: max gap {gap} < {bound}", label(&f)));
    }
    rep
}

/// Full attractor pipeline on random grid-form maps: the quasi-partition
/// verifies and every forward orbit from `seeds` random points settles on a
/// confirmed cycle inside `F ∪ G`.
pub fn finiteness(seed: u64, sign: SlopeSign, maps: usize, seeds: usize) -> SuiteReport {
    let name = match sign {
        SlopeSign::Positive => "positive-slope",
        SlopeSign::Negative => "negative-slope",
    };
    let mut rep = SuiteReport::new(name, seed);
    let mut rng = rng(seed);
    let opts = CycleOptions::default();
    for _ in 0..maps {
        let Some(f) = rep.record(random_map_family(&mut rng, &[2, 3], 2..=5, sign, 50), || "map".into()) else {
            continue;
        };
        let Some(qr) = rep.record(analyze(&f, DEFAULT_MAX_DEPTH, &opts), || label(&f)) else {
            continue;
        };
        rep.check(qr.verdict == Verdict::Finite, || format!("{}: verdict {:?}", label(&f), qr.verdict));
        let (Some(att), Some(census)) = (qr.attractor.as_ref(), qr.confirmed.as_ref()) else {
            continue;
        };
        for _ in 0..seeds {
            let x = random_rational(&mut rng, 10_000);
            let Some(res) = rep.record(f.detect_cycle_with(&x, &opts), || format!("{} seed {x}", label(&f))) else {
                continue;
            };
            rep.check(res.found(), || format!("{}: no cycle from {x}", label(&f)));
            rep.check(res.points.iter().all(|p| att.contains(p)), || {
                format!("{}: cycle {:?} from {x} escapes F ∪ G", label(&f), res.points)
            });
            rep.check(census.find(&res.points).is_some(), || {
                format!("{}: cycle {:?} from {x} not among confirmed cycles", label(&f), res.points)
            });
        }
    }
    rep
}

/// Runs a suite by name with its default sizes; `all` runs every suite.
pub fn run(name: &str, seed: u64, opts: &SimOptions) -> Result<Vec<SuiteReport>> {
    Ok(match name {
        "lemma-square" => vec![lemma_square(seed, 10_000)],
        "backward-orbit" => vec![backward_orbit(seed, 25)],
        "roundtrip" => vec![roundtrip(seed, 100)],
        "conjugacy" => vec![conjugacy(seed, 20, 100, opts)],
        "gap-bound" => vec![gap_bound(seed, 200)],
        "positive-slope" => vec![finiteness(seed, SlopeSign::Positive, 100, 50)],
        "negative-slope" => vec![finiteness(seed, SlopeSign::Negative, 100, 50)],
        "all" => {
            let mut out = Vec::new();
            for n in SUITE_NAMES {
                out.extend(run(n, seed, opts)?);
            }
            out
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown suite {name:?}; expected one of {} or all",
                SUITE_NAMES.join(", ")
            )))
        }
    })
}
