//! Text grammar for exact numbers and maps.
//!
//! Numbers: `p/q`, integers, decimal literals (parsed exactly),
//! `champernowne(b)`, `c` (short for `champernowne(4)`), and a stream
//! followed by a signed rational offset such as `champernowne(4)+1/2` or
//! `c-1/4`. `rational(p/q)` is accepted as an alias of `p/q`.
//!
//! Maps: comma-separated `key=value` pairs, list items separated by `:`:
//! `beta=2,sign=-,bp=0:1/6:1/2:5/6:1,alpha=1:2:1:2`. Use `a=` instead of
//! `alpha=` for general rational intercepts.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::contraction::{PiecewiseAffineContraction, SlopeSign};
use crate::exactnum::{DigitStream, Rational, RealValue, StreamSummary};
use crate::{Error, Result};

/// Digits of a stream written out in JSON summaries.
pub const SUMMARY_PREFIX: usize = 32;

pub fn parse_rational(s: &str) -> Result<Rational> {
    s.parse()
}

pub fn parse_number(s: &str) -> Result<RealValue> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(inner) = s.strip_prefix("rational(").and_then(|r| r.strip_suffix(')')) {
        return Ok(RealValue::Rational(inner.parse()?));
    }
    let (stream, rest) = if let Some(after) = s.strip_prefix("champernowne(") {
        let close = after
            .find(')')
            .ok_or_else(|| Error::Parse(format!("unclosed champernowne( in {s:?}")))?;
        let base: u32 = after[..close]
            .parse()
            .map_err(|_| Error::Parse(format!("bad champernowne base in {s:?}")))?;
        (DigitStream::champernowne(base)?, &after[close + 1..])
    } else if s == "c" || s.starts_with("c+") || s.starts_with("c-") {
        (DigitStream::champernowne(4)?, &s[1..])
    } else {
        return Ok(RealValue::Rational(s.parse()?));
    };
    if rest.is_empty() {
        return Ok(RealValue::Stream(stream));
    }
    let offset: Rational = match rest.as_bytes()[0] {
        b'+' => rest[1..].parse()?,
        b'-' => -rest[1..].parse::<Rational>()?,
        _ => return Err(Error::Parse(format!("expected +/- offset in {s:?}"))),
    };
    Ok(RealValue::Stream(stream.offset_add(&offset)?))
}

/// Three comma-separated numbers.
pub fn parse_triple(s: &str) -> Result<[RealValue; 3]> {
    let parts: Vec<RealValue> = s.split(',').map(parse_number).collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<RealValue>| Error::Parse(format!("expected 3 values, got {}", v.len())))
}

pub fn parse_rational_triple(s: &str) -> Result<[Rational; 3]> {
    let parts: Vec<Rational> = s.split(',').map(parse_rational).collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<Rational>| Error::Parse(format!("expected 3 values, got {}", v.len())))
}

pub fn parse_map(s: &str) -> Result<PiecewiseAffineContraction> {
    let mut beta = None;
    let mut sign = None;
    let mut bps = None;
    let mut alphas = None;
    let mut intercepts = None;
    for pair in s.split(',') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {pair:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "beta" => beta = Some(v.parse::<u32>().map_err(|_| Error::Parse(format!("bad beta {v:?}")))?),
            "sign" => {
                sign = Some(match v {
                    "+" | "+1" | "1" => SlopeSign::Positive,
                    "-" | "-1" => SlopeSign::Negative,
                    _ => return Err(Error::Parse(format!("bad sign {v:?}"))),
                })
            }
            "bp" => bps = Some(v.split(':').map(parse_number).collect::<Result<Vec<_>>>()?),
            "alpha" => {
                alphas = Some(
                    v.split(':')
                        .map(|a| a.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad alpha {a:?}"))))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "a" => intercepts = Some(v.split(':').map(parse_rational).collect::<Result<Vec<_>>>()?),
            _ => return Err(Error::Parse(format!("unknown map key {k:?}"))),
        }
    }
    let beta = beta.ok_or_else(|| Error::Parse("map needs beta=".into()))?;
    let sign = sign.ok_or_else(|| Error::Parse("map needs sign=".into()))?;
    let bps = bps.ok_or_else(|| Error::Parse("map needs bp=".into()))?;
    match (alphas, intercepts) {
        (Some(a), None) => PiecewiseAffineContraction::grid_form(beta, sign, bps, a),
        (None, Some(a)) => PiecewiseAffineContraction::with_intercepts(beta, sign, bps, a),
        _ => Err(Error::Parse("map needs exactly one of alpha= or a=".into())),
    }
}

impl Serialize for RealValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RealValue::Rational(r) => r.serialize(serializer),
            RealValue::Stream(s) => s.summary(SUMMARY_PREFIX).serialize(serializer),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RealRepr {
    Text(String),
    Stream(StreamSummary),
}

impl<'de> Deserialize<'de> for RealValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match RealRepr::deserialize(deserializer)? {
            RealRepr::Text(s) => parse_number(&s).map_err(serde::de::Error::custom),
            RealRepr::Stream(summary) => {
                let v = parse_number(&summary.generator).map_err(serde::de::Error::custom)?;
                if let RealValue::Stream(s) = &v {
                    if s.base() != summary.base || s.prefix(summary.prefix.len()) != summary.prefix {
                        return Err(serde::de::Error::custom(format!(
                            "stream summary for {} does not match its generator",
                            summary.generator
                        )));
                    }
                }
                Ok(v)
            }
        }
    }
}
