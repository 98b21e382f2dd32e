use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

mod commands;

/// Exit codes: 0 success, 2 usage, 3 verification failure,
/// 4 inconclusive or precision exhausted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
    Inconclusive,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Failed => 3,
            Status::Inconclusive => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "pwac", version, about = "Attractors of piecewise contractions and the switched server", args_override_self = true)]
struct Cli {
    /// JSON file with the command name under "command" and flags as keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Stream digits used for switching decisions with irrational parameters.
    #[arg(long, global = true, env = "PWAC_PRECISION", default_value_t = pwac::serversim::DEFAULT_DIGITS)]
    precision: usize,

    /// Write the report (or the trajectory, for simulate) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Target {
    /// Map such as beta=2,sign=-,bp=0:1/6:1/2:5/6:1,alpha=1:2:1:2
    #[arg(long)]
    pub map: Option<String>,
    /// Switching ratios d1,d2,d3 of the server.
    #[arg(long)]
    pub d: Option<String>,
    /// Breakpoints x1,x2,x3 of the server map, e.g. c-1/4,c,c+1/2
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct ServerTarget {
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Forward orbits from seeds until they settle on a cycle.
    Attractor {
        #[command(flatten)]
        target: Target,
        /// Comma-separated seeds in [0, 1).
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 256)]
        max_period: usize,
    },
    /// Invariant quasi-partition and the finite superset of the attractor.
    Quasipartition {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = pwac::quasipart::DEFAULT_MAX_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Event-driven trajectory of the switched server.
    Simulate {
        #[command(flatten)]
        target: ServerTarget,
        /// Initial volumes v1,v2,v3 summing to 1.
        #[arg(long)]
        v0: String,
        /// Tank served first; needed when v0 is interior.
        #[arg(long)]
        served: Option<usize>,
        #[arg(long, default_value_t = 60)]
        events: usize,
        /// Sample points per segment.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Decimal digits in CSV output.
        #[arg(long, default_value_t = 15)]
        digits: usize,
    },
    /// Factor census of a number's digit expansion.
    Richness {
        /// p/q, champernowne(b), or champernowne(b)±p/q
        #[arg(long)]
        number: String,
        /// Base for rational numbers; streams carry their own.
        #[arg(long)]
        base: Option<u32>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        prefix: usize,
    },
    /// Seeded property suites.
    Verify {
        /// lemma-square, backward-orbit, roundtrip, conjugacy, gap-bound,
        /// positive-slope, negative-slope or all
        suite: String,
        #[arg(long, default_value_t = pwac::suites::DEFAULT_SEED)]
        seed: u64,
    },
}

const COMMANDS: [&str; 5] = ["attractor", "quasipartition", "simulate", "richness", "verify"];

/// Turns a JSON config into command-line tokens: the command name, then
/// `--key value` for each entry. Flags given on the command line come later
/// and override.
fn config_tokens(path: &Path) -> anyhow::Result<(String, Vec<OsString>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let Value::Object(obj) = serde_json::from_str::<Value>(&text).context("config is not valid JSON")? else {
        bail!("config must be a JSON object");
    };
    let command = obj
        .get("command")
        .and_then(Value::as_str)
        .context("config needs a \"command\" string")?
        .to_string();
    let mut tokens = Vec::new();
    for (key, value) in obj.iter().filter(|(k, _)| *k != "command") {
        let text = match value {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(true) => {
                tokens.push(format!("--{}", key.replace('_', "-")).into());
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::Array(items) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string()))
                .collect::<Vec<_>>()
                .join(","),
            Value::Object(_) => bail!("config key {key:?} holds an object"),
        };
        if key == "suite" {
            tokens.push(text.into());
        } else {
            tokens.push(format!("--{}", key.replace('_', "-")).into());
            tokens.push(text.into());
        }
    }
    Ok((command, tokens))
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Rebuilds argv as `pwac <command> <config flags> <remaining flags>`.
fn merged_args(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let (command, cfg) = config_tokens(&path)?;
    let mut rest: Vec<OsString> = Vec::new();
    let mut it = args.into_iter().skip(1);
    let mut saw_command = false;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().to_string();
        if s == "--config" {
            it.next();
            continue;
        }
        if s.starts_with("--config=") {
            continue;
        }
        if !saw_command && COMMANDS.contains(&s.as_str()) {
            if s != command {
                bail!("command {s} conflicts with config command {command}");
            }
            saw_command = true;
            continue;
        }
        rest.push(a);
    }
    let mut out: Vec<OsString> = vec!["pwac".into(), command.into()];
    out.extend(cfg);
    out.extend(rest);
    Ok(out)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit_report(report: &Value, out: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let Some(command) = cli.command else {
        bail!(UsageError("no command given; try --help".into()));
    };
    let out = cli.out.as_deref();
    let (report, status) = match command {
        Command::Attractor {
            target,
            seeds,
            max_steps,
            max_period,
        } => commands::attractor(&target, &seeds, max_steps, max_period, cli.precision)?,
        Command::Quasipartition { target, depth, max_steps } => {
            commands::quasipartition(&target, depth, max_steps, cli.precision)?
        }
        Command::Simulate {
            target,
            v0,
            served,
            events,
            samples,
            format,
            digits,
        } => {
            let sim = commands::SimulateArgs {
                target: &target,
                v0: &v0,
                served,
                events,
                samples,
                format,
                digits,
                precision: cli.precision,
            };
            let (summary, data, status) = commands::simulate(&sim)?;
            match out {
                Some(p) => {
                    write_atomic(p, &data)?;
                    emit_report(&summary, None)?;
                }
                None => {
                    std::io::stdout().write_all(&data)?;
                    eprintln!("{}", serde_json::to_string_pretty(&summary)?);
                }
            }
            return Ok(status);
        }
        Command::Richness { number, base, k, prefix } => commands::richness(&number, base, k, prefix)?,
        Command::Verify { suite, seed } => commands::verify(&suite, seed, cli.precision)?,
    };
    emit_report(&report, out)?;
    Ok(status)
}

/// Bad input that clap could not catch.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use pwac::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::ZeroDenominator
            | E::OutOfRange(_)
            | E::InvalidBase(_)
            | E::InvalidMap(_)
            | E::PrefixTooShort { .. }
            | E::InvalidArgument(_)
            | E::Parse(_),
        ) => 2,
        Some(E::ConstructionViolation(_) | E::Mismatch(_) | E::NotBoundary(_) | E::Anomaly(_)) => 3,
        Some(E::Undecidable { .. } | E::PrecisionExhausted(_) | E::NonTerminating(..)) => 4,
        None => 1,
    }
}

fn main() -> ExitCode {
    let args = match merged_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
