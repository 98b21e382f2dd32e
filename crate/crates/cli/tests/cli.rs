use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pwac(args: &[&str]) -> Output {
    pwac_env(args, &[])
}

fn pwac_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pwac"));
    cmd.args(args).env_remove("PWAC_PRECISION");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn strs(v: &Value) -> Vec<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn attractor_of_unit_ratio_server() {
    let r = json_of(&pwac(&["attractor", "--d", "1,1,1", "--seeds", "0"]));
    assert_eq!(strs(&r["attractor"]), ["2/9", "5/9", "8/9"]);
    assert_eq!(r["verdict"], "finite");
    assert_eq!(r["params"]["d"][0]["exact"], "1/1");
}

#[test]
fn attractor_of_champernowne_server() {
    let r = json_of(&pwac(&["attractor", "--x", "c-1/4,c,c+1/2", "--seeds", "0.11,0.8"]));
    assert_eq!(strs(&r["attractor"]), ["1/15", "4/15", "7/15", "13/15"]);
    let states: Vec<Vec<String>> = r["simplex_states"].as_array().unwrap().iter().map(strs).collect();
    for want in [["2/5", "3/5", "0/1"], ["0/1", "4/5", "1/5"], ["2/5", "0/1", "3/5"], ["0/1", "1/5", "4/5"]] {
        assert!(states.iter().any(|s| s == &want), "{states:?}");
    }
    assert_eq!(r["params"]["map"]["breakpoints"][2]["generator"], "champernowne(4)");
}

#[test]
fn attractor_of_map_spec() {
    let r = json_of(&pwac(&["attractor", "--map", "beta=2,sign=+,bp=0:1/2:1,alpha=1:2", "--seeds", "1/3"]));
    assert_eq!(strs(&r["attractor"]), ["0/1"]);
    assert_eq!(r["seeds"][0]["seed"], "1/3");
}

#[test]
fn quasipartition_reports() {
    let r = json_of(&pwac(&["quasipartition", "--map", "beta=2,sign=+,bp=0:1/2:1,alpha=1:2"]));
    assert_eq!(r["intervals"], serde_json::json!([["0/1", "1/2"], ["1/2", "1/1"]]));
    assert_eq!(r["tau"], serde_json::json!([0, 1]));
    assert_eq!(strs(&r["F"]), ["0/1", "1/1"]);
    assert_eq!(strs(&r["G"]), ["0/1", "1/2", "1/1"]);

    let r = json_of(&pwac(&["quasipartition", "--d", "1,1,1"]));
    assert_eq!(r["verdict"], "finite");
    assert_eq!(r["verified"], true);
    let f = strs(&r["F"]);
    for p in ["2/9", "8/9", "5/9"] {
        assert!(f.iter().any(|x| x == p));
    }
}

#[test]
fn quasipartition_rejects_negative_slope_violation() {
    let out = pwac(&["quasipartition", "--map", "beta=2,sign=-,bp=0:1/2:1,alpha=2:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shallow_depth_is_inconclusive() {
    let out = pwac(&["quasipartition", "--d", "1,1,1", "--depth", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["verdict"], "inconclusive");
}

#[test]
fn simulate_champernowne_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("orbit.csv");
    let out = pwac(&[
        "simulate", "--x", "c-1/4,c,c+1/2", "--v0", "0.11,0,0.89", "--events", "60", "--out",
        path.to_str().unwrap(),
    ]);
    let r = json_of(&out);
    let est = &r["cycle_estimate"];
    assert_eq!(est["period"], 4);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("t,v1,v2,v3,served_tank\n"));
    assert_eq!(csv.lines().count(), 1 + 60 * 10 + 1);
    // nothing but the output file is left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn simulate_exact_three_cycle() {
    let out = pwac(&["simulate", "--d", "1,1,1", "--v0", "0,1/3,2/3", "--events", "3", "--samples", "1", "--digits", "6"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[1], "0.000000,0.000000,0.333333,0.666666,3");
    assert_eq!(rows[2], "1.000000,0.333333,0.666666,0.000000,2");
    assert_eq!(rows[4], "3.000000,0.000000,0.333333,0.666666,1");
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["cycle_estimate"]["exact"], true);
    assert_eq!(summary["cycle_estimate"]["period"], 3);
}

#[test]
fn simulate_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("orbit.json");
    let out = pwac(&[
        "simulate", "--d", "1,1,1", "--v0", "0,1/3,2/3", "--events", "2", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let tr: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(tr["segments"][0]["duration"], "1/1");
    assert_eq!(tr["segments"][1]["served"], 2);
}

#[test]
fn simulate_interior_start_needs_served_tank() {
    assert_eq!(pwac(&["simulate", "--d", "1,1,1", "--v0", "0.5,0.3,0.2"]).status.code(), Some(2));
    let out = pwac(&["simulate", "--d", "1,1,1", "--v0", "0.5,0.3,0.2", "--served", "1", "--events", "1"]);
    assert!(out.status.success());
}

#[test]
fn precision_from_environment() {
    let args = ["simulate", "--x", "c-1/4,c,c+1/2", "--v0", "0.11,0,0.89", "--events", "60"];
    assert_eq!(pwac_env(&args, &[("PWAC_PRECISION", "1")]).status.code(), Some(4));
    assert!(pwac_env(&args, &[("PWAC_PRECISION", "40")]).status.success());
}

#[test]
fn richness_reports() {
    let r = json_of(&pwac(&["richness", "--number", "champernowne(4)", "--k", "3", "--prefix", "10000"]));
    assert_eq!(r["census"]["count"], 64);
    assert_eq!(r["confirmed"], true);
    let r = json_of(&pwac(&["richness", "--number", "1/3", "--base", "4", "--k", "2"]));
    assert_eq!(r["census"]["count"], 1);
    assert_eq!(r["expansion"]["period"], serde_json::json!([1]));
    assert_eq!(r["confirmed"], false);
    let r = json_of(&pwac(&["richness", "--number", "champernowne(4)+1/2", "--k", "3"]));
    assert_eq!(r["census"]["count"], 64);
    assert_eq!(pwac(&["richness", "--number", "1/3", "--k", "2"]).status.code(), Some(2));
    assert_eq!(
        pwac(&["richness", "--number", "champernowne(4)", "--k", "3", "--prefix", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_suites() {
    let r = json_of(&pwac(&["verify", "roundtrip"]));
    assert_eq!(r["passed"], true);
    assert_eq!(r["params"]["seed"], pwac::suites::DEFAULT_SEED);
    let r = json_of(&pwac(&["verify", "lemma-square", "--seed", "7"]));
    assert_eq!(r["suites"][0]["checks"], 40_000);
    assert_eq!(pwac(&["verify", "nonsense"]).status.code(), Some(2));
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "attractor", "map": "beta=2,sign=+,bp=0:1/2:1,alpha=1:2", "seeds": ["1/3", "3/4"]}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let r = json_of(&pwac(&["--config", c]));
    assert_eq!(r["seeds"].as_array().unwrap().len(), 2);
    let r = json_of(&pwac(&["attractor", "--config", c, "--seeds", "1/5"]));
    assert_eq!(r["seeds"].as_array().unwrap().len(), 1);
    assert_eq!(pwac(&["simulate", "--config", c]).status.code(), Some(2));
}

#[test]
fn report_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = pwac(&["attractor", "--d", "1,1,1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(&path)).unwrap()).unwrap();
    assert_eq!(r["command"], "attractor");
}

#[test]
fn usage_errors() {
    assert_eq!(pwac(&[]).status.code(), Some(2));
    assert_eq!(pwac(&["attractor"]).status.code(), Some(2));
    assert_eq!(pwac(&["attractor", "--d", "1,1", "--seeds", "0"]).status.code(), Some(2));
    assert_eq!(pwac(&["attractor", "--d", "1,1,1", "--x", "1/6,1/2,5/6"]).status.code(), Some(2));
}
