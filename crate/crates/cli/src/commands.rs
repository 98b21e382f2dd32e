//! Report builders for each subcommand.

use serde_json::{json, Value};

use pwac::betadyn::richness_evidence;
use pwac::contraction::{CycleOptions, PiecewiseAffineContraction};
use pwac::exactnum::{digits_of_rational, DigitStream, Rational, RealValue};
use pwac::numspec::{parse_map, parse_number, parse_rational, parse_rational_triple, parse_triple};
use pwac::quasipart::{analyze, Verdict};
use pwac::serversim::{d_from_x, interval_map, phi, trajectory, DTriple, SimOptions, SimplexState};
use pwac::suites;

use crate::{Format, ServerTarget, Status, Target, UsageError};

/// Decimal digits shown next to exact values.
const SHOWN_DIGITS: usize = 20;
/// Missing words listed in a census report.
const SHOWN_MISSING: usize = 64;

fn rat(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn rats(rs: &[Rational]) -> Value {
    Value::Array(rs.iter().map(rat).collect())
}

fn decimals(rs: &[Rational]) -> Value {
    Value::Array(rs.iter().map(|r| Value::String(r.to_decimal_string(SHOWN_DIGITS))).collect())
}

fn state(s: &SimplexState) -> Value {
    rats(s.volumes())
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn server_params(d: Option<&str>, x: Option<&str>) -> anyhow::Result<DTriple> {
    match (d, x) {
        (Some(d), _) => {
            let [a, b, c] = parse_triple(d)?;
            let exact = |v: RealValue| {
                v.as_rational()
                    .cloned()
                    .ok_or_else(|| usage("d values must be rational; give stream parameters through --x"))
            };
            Ok(DTriple::exact(exact(a)?, exact(b)?, exact(c)?)?)
        }
        (None, Some(x)) => Ok(d_from_x(parse_triple(x)?)?),
        (None, None) => Err(usage("one of --d or --x is required")),
    }
}

fn resolve(target: &Target) -> anyhow::Result<(PiecewiseAffineContraction, Option<DTriple>)> {
    if let Some(spec) = &target.map {
        return Ok((parse_map(spec)?, None));
    }
    let d = server_params(target.d.as_deref(), target.x.as_deref())?;
    Ok((interval_map(&d)?, Some(d)))
}

fn params(f: &PiecewiseAffineContraction, d: Option<&DTriple>, precision: usize) -> anyhow::Result<Value> {
    let mut p = json!({ "map": f.describe(), "precision": precision });
    if let Some(d) = d {
        p["d"] = serde_json::to_value(d)?;
        p["d_approx"] = json!(d.approx(precision)?);
    }
    Ok(p)
}

pub fn attractor(
    target: &Target,
    seeds: &str,
    max_steps: usize,
    max_period: usize,
    precision: usize,
) -> anyhow::Result<(Value, Status)> {
    let (f, d) = resolve(target)?;
    let seeds: Vec<Rational> = seeds.split(',').map(|s| parse_rational(s.trim())).collect::<Result<_, _>>()?;
    let opts = CycleOptions { max_steps, max_period };
    let mut per_seed = Vec::new();
    let mut points: Vec<Rational> = Vec::new();
    let mut all_found = true;
    for seed in &seeds {
        let res = f.detect_cycle_with(seed, &opts)?;
        all_found &= res.found();
        points.extend(res.points.iter().cloned());
        per_seed.push(json!({
            "seed": rat(seed),
            "status": res.status,
            "steps": res.steps,
            "cycle": rats(&res.points),
            "cycle_decimal": decimals(&res.points),
        }));
    }
    points.sort();
    points.dedup();
    let mut report = json!({
        "command": "attractor",
        "params": params(&f, d.as_ref(), precision)?,
        "bounds": { "max_steps": max_steps, "max_period": max_period },
        "seeds": per_seed,
        "attractor": rats(&points),
        "attractor_decimal": decimals(&points),
        "verdict": if all_found { "finite" } else { "inconclusive" },
    });
    if d.is_some() {
        let states: Vec<Value> = points
            .iter()
            .filter(|p| p.in_unit_interval())
            .map(|p| phi(p).map(|s| state(&s)))
            .collect::<Result<_, _>>()?;
        report["simplex_states"] = Value::Array(states);
    }
    Ok((report, if all_found { Status::Ok } else { Status::Inconclusive }))
}

pub fn quasipartition(target: &Target, depth: usize, max_steps: usize, precision: usize) -> anyhow::Result<(Value, Status)> {
    let (f, d) = resolve(target)?;
    let opts = CycleOptions {
        max_steps,
        ..CycleOptions::default()
    };
    let rep = analyze(&f, depth, &opts)?;
    let mut report = json!({
        "command": "quasipartition",
        "params": params(&f, d.as_ref(), precision)?,
        "depth": depth,
        "chains": rep.closure.chains,
        "H": rats(&rep.closure.h),
        "verdict": rep.verdict,
    });
    if let Some(qp) = &rep.partition {
        report["intervals"] = Value::Array(qp.intervals().iter().map(|(a, b)| json!([rat(a), rat(b)])).collect());
        report["tau"] = json!(qp.tau);
        report["verified"] = json!(rep.verified);
    }
    if let Some(att) = &rep.attractor {
        report["P"] = json!(att.periodic);
        report["q"] = json!(att.q);
        report["F"] = rats(&att.f_points);
        report["G"] = rats(&att.g_points);
        report["boundary"] = rats(&att.boundary);
    }
    if let Some(census) = &rep.confirmed {
        report["confirmed_cycles"] = serde_json::to_value(&census.cycles)?;
        report["anomalies"] = json!(census.anomalies);
    }
    let status = match rep.verdict {
        Verdict::Finite => Status::Ok,
        Verdict::Inconclusive => Status::Inconclusive,
        Verdict::Failed => Status::Failed,
    };
    Ok((report, status))
}

pub struct SimulateArgs<'a> {
    pub target: &'a ServerTarget,
    pub v0: &'a str,
    pub served: Option<usize>,
    pub events: usize,
    pub samples: usize,
    pub format: Format,
    pub digits: usize,
    pub precision: usize,
}

/// Period of the tail of `states`, if the last state repeats within `tol`
/// some `p <= max_p` steps back.
fn tail_period(states: &[&SimplexState], tol: f64, max_p: usize) -> Option<usize> {
    let n = states.len();
    (1..=max_p.min(n.saturating_sub(1))).find(|&p| states[n - 1].distance(states[n - 1 - p]) < tol)
}

pub fn simulate(args: &SimulateArgs) -> anyhow::Result<(Value, Vec<u8>, Status)> {
    let d = server_params(args.target.d.as_deref(), args.target.x.as_deref())?;
    let v0 = SimplexState::from_array(parse_rational_triple(args.v0)?)?;
    let opts = SimOptions {
        digits: args.precision,
        ..SimOptions::default()
    };
    let tr = trajectory(&v0, &d, args.events, args.served, &opts)?;
    let data = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            tr.write_csv(args.samples, args.digits, &mut buf)?;
            buf
        }
        Format::Json => {
            let mut buf = serde_json::to_vec_pretty(&tr)?;
            buf.push(b'\n');
            buf
        }
    };
    let states: Vec<&SimplexState> = tr.states().collect();
    let (cycle, exact) = match tr.exact_cycle() {
        Some(c) => (Some(c), true),
        None => (
            tail_period(&states, 1e-9, 12).map(|p| states[states.len() - p..].iter().map(|s| (*s).clone()).collect()),
            false,
        ),
    };
    let total_time = tr.event_times().last().cloned().unwrap_or_else(Rational::zero);
    let summary = json!({
        "command": "simulate",
        "params": {
            "d": d,
            "d_approx": d.approx(args.precision)?,
            "v0": state(&v0),
            "served": args.served,
            "events": args.events,
            "samples": args.samples,
            "precision": args.precision,
        },
        "final_state": tr.final_state().map(state),
        "total_time": rat(&total_time),
        "cycle_estimate": cycle.as_ref().map(|c| {
            json!({
                "exact": exact,
                "period": c.len(),
                "states": c.iter().map(state).collect::<Vec<_>>(),
                "states_decimal": c.iter().map(|s| decimals(s.volumes())).collect::<Vec<_>>(),
            })
        }),
    });
    Ok((summary, data, Status::Ok))
}

pub fn richness(number: &str, base: Option<u32>, k: usize, prefix: usize) -> anyhow::Result<(Value, Status)> {
    let (stream, expansion) = match parse_number(number)? {
        RealValue::Rational(r) => {
            let b = base.ok_or_else(|| usage("--base is required for rational numbers"))?;
            (DigitStream::of_rational(&r, b)?, Some(digits_of_rational(&r, b)?))
        }
        RealValue::Stream(s) => {
            if let Some(b) = base.filter(|&b| b != s.base()) {
                return Err(usage(format!("{number} has base {}, not {b}", s.base())));
            }
            (s, None)
        }
    };
    let ev = richness_evidence(&stream, k, prefix)?;
    let report = json!({
        "command": "richness",
        "params": { "number": number, "base": stream.base(), "k": k, "prefix": prefix },
        "generator": ev.number,
        "expansion": expansion,
        "census": {
            "k": ev.census.k,
            "count": ev.census.count,
            "possible": ev.census.possible,
            "missing_count": ev.census.missing.len(),
            "missing": ev.census.missing.iter().take(SHOWN_MISSING).collect::<Vec<_>>(),
        },
        "confirmed": ev.confirmed,
        "statement": ev.statement,
    });
    Ok((report, Status::Ok))
}

pub fn verify(suite: &str, seed: u64, precision: usize) -> anyhow::Result<(Value, Status)> {
    let opts = SimOptions {
        digits: precision,
        ..SimOptions::default()
    };
    let reports = suites::run(suite, seed, &opts)?;
    let passed = reports.iter().all(|r| r.passed());
    let report = json!({
        "command": "verify",
        "params": { "suite": suite, "seed": seed, "precision": precision },
        "suites": reports.iter().map(|r| json!({
            "name": r.name,
            "checks": r.checks,
            "passed": r.passed(),
            "failure_count": r.failures.len(),
            "failures": r.failures.iter().take(20).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "passed": passed,
    });
    Ok((report, if passed { Status::Ok } else { Status::Failed }))
}
