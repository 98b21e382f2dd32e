//! Finite attractors through invariant quasi-partitions.
//!
//! The pipeline: collect all backward iterates of the interior breakpoints
//! (the set `H`), cut `(0, 1)` at those points, check that every piece is
//! mapped inside a single piece (the map `τ`), then read off one fixed point
//! per periodic piece of `τ`. The resulting `F ∪ G` (fixed points plus cut
//! points) contains the global attractor.

use std::collections::{BTreeSet, HashSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::betadyn::ChainEnd;
use crate::contraction::{Affine, CycleOptions, CycleStatus, PiecewiseAffineContraction};
use crate::exactnum::Rational;
use crate::{Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 10_000;

/// `x_i, f^{-1}(x_i), f^{-2}(x_i), …` for one interior breakpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chain {
    pub breakpoint: Rational,
    /// `f(points[k+1]) = points[k]`; points are pairwise distinct.
    pub points: Vec<Rational>,
    pub end: ChainEnd,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackwardClosure {
    pub chains: Vec<Chain>,
    /// Sorted union of all chain points in `(0, 1)`.
    pub h: Vec<Rational>,
}

impl BackwardClosure {
    /// Every chain ended by death or by a revisit.
    pub fn conclusive(&self) -> bool {
        self.chains.iter().all(|c| c.end != ChainEnd::DepthExceeded)
    }
}

fn rational_breakpoints(f: &PiecewiseAffineContraction) -> Result<Vec<Rational>> {
    f.rational_breakpoints().ok_or_else(|| {
        Error::InvalidArgument("quasi-partitions need rational breakpoints".into())
    })
}

pub fn backward_closure(f: &PiecewiseAffineContraction, max_depth: usize) -> Result<BackwardClosure> {
    let bps = rational_breakpoints(f)?;
    let mut chains = Vec::new();
    for x in &bps[1..bps.len() - 1] {
        let mut points = vec![x.clone()];
        let mut seen: HashSet<Rational> = HashSet::from([x.clone()]);
        let mut end = ChainEnd::DepthExceeded;
        for _ in 0..max_depth {
            match f.preimage(points.last().expect("non-empty"))? {
                None => {
                    end = ChainEnd::Dead;
                    break;
                }
                Some(z) if seen.contains(&z) => {
                    end = ChainEnd::Cyclic;
                    break;
                }
                Some(z) => {
                    seen.insert(z.clone());
                    points.push(z);
                }
            }
        }
        chains.push(Chain {
            breakpoint: x.clone(),
            points,
            end,
        });
    }
    let h: BTreeSet<Rational> = chains
        .iter()
        .flat_map(|c| c.points.iter())
        .filter(|p| p.is_positive() && p.in_unit_interval())
        .cloned()
        .collect();
    Ok(BackwardClosure {
        chains,
        h: h.into_iter().collect(),
    })
}

/// Open intervals `J_s = (g_s, g_{s+1})` cut out by `G = {0} ∪ H ∪ {1}` and
/// the index map `τ` with `f(J_s) ⊆ J_{τ(s)}`. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiPartition {
    pub g: Vec<Rational>,
    pub tau: Vec<usize>,
    /// Branch of `f` acting on each interval.
    pub branches: Vec<usize>,
}

impl QuasiPartition {
    pub fn m(&self) -> usize {
        self.g.len() - 1
    }

    pub fn interval(&self, s: usize) -> (Rational, Rational) {
        (self.g[s].clone(), self.g[s + 1].clone())
    }

    pub fn intervals(&self) -> Vec<(Rational, Rational)> {
        (0..self.m()).map(|s| self.interval(s)).collect()
    }
}

/// Open image `f((lo, hi))` under a single branch.
fn open_image(aff: &Affine, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
    let (a, b) = (aff.apply(lo), aff.apply(hi));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Index of the component of `(0,1) \ G` containing the open interval `(a, b)`.
fn containing_component(g: &[Rational], a: &Rational, b: &Rational) -> std::result::Result<usize, Rational> {
    // last cut point <= a
    let s = g.partition_point(|p| p <= a).saturating_sub(1).min(g.len() - 2);
    if &g[s] <= a && b <= &g[s + 1] {
        Ok(s)
    } else {
        Err(g[s + 1].clone())
    }
}

pub fn build_partition(f: &PiecewiseAffineContraction, h: &[Rational]) -> Result<QuasiPartition> {
    let bps = rational_breakpoints(f)?;
    let mut cuts: BTreeSet<Rational> = BTreeSet::new();
    for p in h {
        if !(p.is_positive() && p.in_unit_interval()) {
            return Err(Error::InvalidArgument(format!("cut point {p} not in (0,1)")));
        }
        cuts.insert(p.clone());
    }
    if let Some(missing) = bps[1..bps.len() - 1].iter().find(|b| !cuts.contains(b)) {
        return Err(Error::InvalidArgument(format!(
            "cut set is missing the breakpoint {missing}"
        )));
    }
    let mut g = vec![Rational::zero()];
    g.extend(cuts);
    g.push(Rational::one());
    let m = g.len() - 1;
    let mut tau = Vec::with_capacity(m);
    let mut branches = Vec::with_capacity(m);
    for s in 0..m {
        let (lo, hi) = (&g[s], &g[s + 1]);
        let mid = (lo + hi) / Rational::from_integer(2);
        let branch = f.branch_of(&mid)?;
        let (a, b) = open_image(&f.branch_map(branch), lo, hi);
        let target = containing_component(&g, &a, &b).map_err(|p| {
            Error::ConstructionViolation(format!(
                "f(({lo}, {hi})) = ({a}, {b}) straddles the cut point {p}"
            ))
        })?;
        tau.push(target);
        branches.push(branch);
    }
    Ok(QuasiPartition { g, tau, branches })
}

/// Checks the quasi-partition from scratch: sorted cut points starting at 0
/// and ending at 1, no breakpoint inside any interval, and
/// `f(J_s) ⊆ J_{τ(s)}` for every `s`.
pub fn verify_partition(f: &PiecewiseAffineContraction, qp: &QuasiPartition) -> Result<bool> {
    let bps = rational_breakpoints(f)?;
    let g = &qp.g;
    if g.len() < 2 || !g[0].is_zero() || g[g.len() - 1] != Rational::one() {
        return Ok(false);
    }
    if g.windows(2).any(|w| w[0] >= w[1]) || qp.tau.len() != qp.m() {
        return Ok(false);
    }
    for s in 0..qp.m() {
        let (lo, hi) = qp.interval(s);
        if bps.iter().any(|b| *b > lo && *b < hi) {
            return Ok(false);
        }
        let t = qp.tau[s];
        if t >= qp.m() {
            return Ok(false);
        }
        let mid = (&lo + &hi) / Rational::from_integer(2);
        let (a, b) = open_image(&f.branch_map(f.branch_of(&mid)?), &lo, &hi);
        let (tlo, thi) = qp.interval(t);
        if a < tlo || b > thi {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One cycle of `τ` together with the fixed points of the composed branches.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauCycle {
    pub intervals: Vec<usize>,
    /// `c_i` for each interval of the cycle, same order.
    pub fixed_points: Vec<Rational>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttractorReport {
    /// Periodic intervals of `τ`.
    pub periodic: Vec<usize>,
    pub cycles: Vec<TauCycle>,
    /// Least common multiple of the cycle lengths of `τ`.
    pub q: u64,
    /// De-duplicated fixed points `c_i`.
    pub f_points: Vec<Rational>,
    pub g_points: Vec<Rational>,
    /// Points of `F` outside the domain `[0, 1)`, i.e. equal to 1.
    pub boundary: Vec<Rational>,
}

impl AttractorReport {
    pub fn superset(&self) -> BTreeSet<Rational> {
        self.f_points.iter().chain(&self.g_points).cloned().collect()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.f_points.contains(x) || self.g_points.binary_search(x).is_ok()
    }
}

fn tau_cycles(tau: &[usize]) -> Vec<Vec<usize>> {
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; tau.len()];
    let mut cycles = Vec::new();
    for start in 0..tau.len() {
        let mut path = Vec::new();
        let mut s = start;
        while state[s] == 0 {
            state[s] = 1;
            path.push(s);
            s = tau[s];
        }
        if state[s] == 1 {
            let pos = path.iter().position(|&p| p == s).expect("on path");
            cycles.push(path[pos..].to_vec());
        }
        for p in path {
            state[p] = 2;
        }
    }
    cycles
}

pub fn attractor_superset(f: &PiecewiseAffineContraction, qp: &QuasiPartition) -> Result<AttractorReport> {
    let mut cycles = Vec::new();
    let mut q: u64 = 1;
    let mut f_points: BTreeSet<Rational> = BTreeSet::new();
    for cyc in tau_cycles(&qp.tau) {
        let len = cyc.len();
        q = q.lcm(&(len as u64));
        let mut fixed_points = Vec::with_capacity(len);
        for k in 0..len {
            let composed = (0..len)
                .map(|j| cyc[(k + j) % len])
                .fold(Affine::identity(), |acc, s| f.branch_map(qp.branches[s]).after(&acc));
            let c = composed
                .fixed_point()
                .expect("composition of contractions has slope below 1");
            let (lo, hi) = qp.interval(cyc[k]);
            if c < lo || c > hi {
                return Err(Error::ConstructionViolation(format!(
                    "fixed point {c} outside the closure of ({lo}, {hi})"
                )));
            }
            f_points.insert(c.clone());
            fixed_points.push(c);
        }
        cycles.push(TauCycle {
            intervals: cyc,
            fixed_points,
        });
    }
    let mut periodic: Vec<usize> = cycles.iter().flat_map(|c| c.intervals.iter().copied()).collect();
    periodic.sort_unstable();
    let boundary = f_points.iter().filter(|p| !p.in_unit_interval()).cloned().collect();
    Ok(AttractorReport {
        periodic,
        cycles,
        q,
        f_points: f_points.into_iter().collect(),
        g_points: qp.g.clone(),
        boundary,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfirmedCycle {
    /// Points in orbit order.
    pub points: Vec<Rational>,
    pub status: CycleStatus,
    pub in_superset: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CycleCensus {
    pub cycles: Vec<ConfirmedCycle>,
    /// Seeds whose cycle search hit the step bound.
    pub anomalies: Vec<String>,
}

impl CycleCensus {
    pub fn find(&self, points: &[Rational]) -> Option<&ConfirmedCycle> {
        let key: BTreeSet<&Rational> = points.iter().collect();
        self.cycles
            .iter()
            .find(|c| c.points.iter().collect::<BTreeSet<_>>() == key)
    }
}

/// Cycles realized by forward orbits started at the points of `F` and `G`
/// in `[0, 1)` and inside every periodic interval.
pub fn confirmed_cycles(
    f: &PiecewiseAffineContraction,
    qp: &QuasiPartition,
    report: &AttractorReport,
    opts: &CycleOptions,
) -> Result<CycleCensus> {
    let two = Rational::from_integer(2);
    let mut seeds: Vec<Rational> = report
        .f_points
        .iter()
        .chain(&report.g_points)
        .filter(|p| p.in_unit_interval())
        .cloned()
        .collect();
    seeds.extend(report.periodic.iter().map(|&s| {
        let (lo, hi) = qp.interval(s);
        (lo + hi) / &two
    }));
    let mut census = CycleCensus::default();
    let mut known: HashSet<Vec<Rational>> = HashSet::new();
    for seed in seeds {
        let res = f.detect_cycle_with(&seed, opts)?;
        if !res.found() {
            census
                .anomalies
                .push(format!("no cycle within {} steps from {seed}", opts.max_steps));
            continue;
        }
        if known.insert(res.sorted_points()) {
            census.cycles.push(ConfirmedCycle {
                in_superset: res.points.iter().all(|p| report.contains(p)),
                points: res.points,
                status: res.status,
            });
        }
    }
    Ok(census)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Closure finite, partition verified: the attractor is finite.
    Finite,
    /// Some backward chain exceeded the depth bound; a Cantor-type attractor
    /// cannot be excluded.
    Inconclusive,
    /// The partition failed verification or a confirmed cycle escaped `F ∪ G`.
    Failed,
}

/// Full report of the quasi-partition pipeline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiPartitionReport {
    pub closure: BackwardClosure,
    pub partition: Option<QuasiPartition>,
    pub verified: bool,
    pub attractor: Option<AttractorReport>,
    pub confirmed: Option<CycleCensus>,
    pub verdict: Verdict,
}

pub fn analyze(f: &PiecewiseAffineContraction, max_depth: usize, opts: &CycleOptions) -> Result<QuasiPartitionReport> {
    let closure = backward_closure(f, max_depth)?;
    if !closure.conclusive() {
        return Ok(QuasiPartitionReport {
            closure,
            partition: None,
            verified: false,
            attractor: None,
            confirmed: None,
            verdict: Verdict::Inconclusive,
        });
    }
    let qp = build_partition(f, &closure.h)?;
    let verified = verify_partition(f, &qp)?;
    let attractor = attractor_superset(f, &qp)?;
    let confirmed = confirmed_cycles(f, &qp, &attractor, opts)?;
    let ok = verified && confirmed.anomalies.is_empty() && confirmed.cycles.iter().all(|c| c.in_superset);
    Ok(QuasiPartitionReport {
        closure,
        partition: Some(qp),
        verified,
        attractor: Some(attractor),
        confirmed: Some(confirmed),
        verdict: if ok { Verdict::Finite } else { Verdict::Failed },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::{server_map, SlopeSign};
    use crate::exactnum::{ratio, RealValue};

    fn r(p: i64, q: i64) -> RealValue {
        ratio(p, q).into()
    }

    fn f111() -> PiecewiseAffineContraction {
        server_map(r(1, 6), r(1, 2), r(5, 6)).unwrap()
    }

    fn two_branch() -> PiecewiseAffineContraction {
        PiecewiseAffineContraction::grid_form(2, SlopeSign::Positive, vec![r(0, 1), r(1, 2), r(1, 1)], vec![1, 2])
            .unwrap()
    }

    #[test]
    fn closure_of_server_map() {
        let cl = backward_closure(&f111(), 100).unwrap();
        let first = &cl.chains[0];
        assert_eq!(first.points, vec![ratio(1, 6), ratio(2, 3)]);
        assert_eq!(first.end, ChainEnd::Dead);
        assert!(cl.h.contains(&ratio(1, 6)) && cl.h.contains(&ratio(2, 3)));
        assert!(cl.conclusive());
        for c in &cl.chains {
            for w in c.points.windows(2) {
                assert_eq!(f111().evaluate(&w[1]).unwrap(), w[0]);
            }
        }
    }

    #[test]
    fn closure_two_branch_dead_immediately() {
        let cl = backward_closure(&two_branch(), 100).unwrap();
        assert_eq!(cl.chains[0].points, vec![ratio(1, 2)]);
        assert_eq!(cl.chains[0].end, ChainEnd::Dead);
        assert_eq!(cl.h, vec![ratio(1, 2)]);
    }

    #[test]
    fn closure_cyclic_chain() {
        let f = PiecewiseAffineContraction::grid_form(
            2,
            SlopeSign::Positive,
            vec![r(0, 1), r(1, 3), r(1, 2), r(1, 1)],
            vec![2, 2, 1],
        )
        .unwrap();
        let cl = backward_closure(&f, 50).unwrap();
        assert_eq!(cl.chains[0].points, vec![ratio(1, 3), ratio(2, 3)]);
        assert_eq!(cl.chains[0].end, ChainEnd::Cyclic);
    }

    #[test]
    fn partition_two_branch() {
        let f = two_branch();
        let qp = build_partition(&f, &[ratio(1, 2)]).unwrap();
        assert_eq!(qp.intervals(), vec![(ratio(0, 1), ratio(1, 2)), (ratio(1, 2), ratio(1, 1))]);
        assert_eq!(qp.tau, vec![0, 1]);
        assert!(verify_partition(&f, &qp).unwrap());
        let rep = attractor_superset(&f, &qp).unwrap();
        assert_eq!(rep.f_points, vec![ratio(0, 1), ratio(1, 1)]);
        assert_eq!(rep.g_points, vec![ratio(0, 1), ratio(1, 2), ratio(1, 1)]);
        assert_eq!(rep.q, 1);
        assert_eq!(rep.boundary, vec![ratio(1, 1)]);
        let census = confirmed_cycles(&f, &qp, &rep, &CycleOptions::default()).unwrap();
        assert!(census.find(&[ratio(0, 1)]).is_some());
        let limit = census.find(&[ratio(1, 1)]).expect("boundary limit");
        assert!(matches!(limit.status, CycleStatus::BoundaryLimit { .. }));
    }

    #[test]
    fn partition_server_map() {
        let f = f111();
        let cl = backward_closure(&f, 100).unwrap();
        let qp = build_partition(&f, &cl.h).unwrap();
        assert!(verify_partition(&f, &qp).unwrap());
        let rep = attractor_superset(&f, &qp).unwrap();
        let sup = rep.superset();
        for p in [ratio(2, 9), ratio(8, 9), ratio(5, 9)] {
            assert!(sup.contains(&p));
        }
        assert!(rep.f_points.len() <= qp.m());
        let census = confirmed_cycles(&f, &qp, &rep, &CycleOptions::default()).unwrap();
        // second 3-cycle: 1/9 -> 4/9 -> 7/9 -> 1/9 on branches 1, 2, 3
        assert_eq!(f.evaluate(&ratio(1, 9)).unwrap(), ratio(4, 9));
        assert_eq!(f.evaluate(&ratio(4, 9)).unwrap(), ratio(7, 9));
        assert_eq!(f.evaluate(&ratio(7, 9)).unwrap(), ratio(1, 9));
        assert_eq!(census.cycles.len(), 2);
        assert!(census.find(&[ratio(2, 9), ratio(8, 9), ratio(5, 9)]).is_some());
        assert!(census.find(&[ratio(1, 9), ratio(4, 9), ratio(7, 9)]).is_some());
        assert!(census.cycles.iter().all(|c| c.in_superset));
    }

    #[test]
    fn tampered_partition_fails() {
        let f = f111();
        let cl = backward_closure(&f, 100).unwrap();
        let mut qp = build_partition(&f, &cl.h).unwrap();
        let s = (0..qp.m()).find(|&s| qp.tau[s] + 1 < qp.m()).unwrap();
        qp.tau[s] += 1;
        assert!(!verify_partition(&f, &qp).unwrap());
    }

    #[test]
    fn removing_cut_point_breaks_construction() {
        let f = f111();
        let cl = backward_closure(&f, 100).unwrap();
        let h: Vec<Rational> = cl.h.iter().filter(|p| **p != ratio(2, 3)).cloned().collect();
        assert!(matches!(build_partition(&f, &h), Err(Error::ConstructionViolation(_))));
        let no_bp: Vec<Rational> = cl.h.iter().filter(|p| **p != ratio(1, 6)).cloned().collect();
        assert!(build_partition(&f, &no_bp).is_err());
    }

    #[test]
    fn duplicate_cut_points_collapse() {
        let f = two_branch();
        let qp = build_partition(&f, &[ratio(1, 2), ratio(1, 2)]).unwrap();
        assert_eq!(qp.m(), 2);
    }

    #[test]
    fn single_affine_map_has_one_fixed_point() {
        let f = PiecewiseAffineContraction::grid_form(2, SlopeSign::Positive, vec![r(0, 1), r(1, 2), r(1, 1)], vec![1, 1])
            .unwrap();
        let rep = analyze(&f, 100, &CycleOptions::default()).unwrap();
        assert_eq!(rep.attractor.unwrap().f_points, vec![ratio(0, 1)]);
        assert_eq!(rep.verdict, Verdict::Finite);
    }

    #[test]
    fn two_trapping_intervals() {
        let f = PiecewiseAffineContraction::grid_form(
            3,
            SlopeSign::Positive,
            vec![r(0, 1), r(1, 3), r(2, 3), r(1, 1)],
            vec![1, 2, 2],
        )
        .unwrap();
        let rep = analyze(&f, 100, &CycleOptions::default()).unwrap();
        let census = rep.confirmed.unwrap();
        assert_eq!(census.cycles.len(), 2);
        assert!(census.find(&[ratio(0, 1)]).is_some());
        assert!(census.find(&[ratio(1, 2)]).is_some());
        assert_eq!(rep.verdict, Verdict::Finite);
    }

    #[test]
    fn tau_cycle_detection() {
        assert_eq!(tau_cycles(&[1, 2, 1, 0]), vec![vec![1, 2]]);
        assert_eq!(tau_cycles(&[0, 1]), vec![vec![0], vec![1]]);
    }
}
