//! End-to-end runs of the `tpw` binary and the job runner.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tpw_cli::{reproduce, run, suite_configs, JobConfig, JobError, Suite};

fn write_config(name: &str, json: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("{name}.json"));
    std::fs::write(&path, json).unwrap();
    path
}

fn tpw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpw"))
        .args(args)
        .env_remove(tpw_cli::MAX_UNKNOWNS_ENV)
        .output()
        .unwrap()
}

fn run_config(name: &str, json: &str) -> (i32, Value, String) {
    let path = write_config(name, json);
    let out = tpw(&["run", "--config", path.to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, String::from_utf8(out.stderr).unwrap())
}

fn no_floats(v: &Value) -> bool {
    match v {
        Value::Number(n) => !n.is_f64(),
        Value::Array(a) => a.iter().all(no_floats),
        Value::Object(o) => o.values().all(no_floats),
        _ => true,
    }
}

const B1: &str = r#"{ "family": "block", "g": ["-1", "0"], "h": ["0", "1"] }"#;

#[test]
fn check_lie_passes_and_corruption_fails() {
    let ok = format!(r#"{{ "schema_version": 1, "algebra": {B1}, "window": {{ "radius": 2, "inner_margin": 1 }}, "task": "check-lie" }}"#);
    let (code, report, _) = run_config("lie_ok", &ok);
    assert_eq!(code, 0);
    assert_eq!(report["pass"], true);

    let bad = r#"{ "schema_version": 1,
        "algebra": { "family": "block_unchecked", "g": ["1", "0", "0"], "f": [["0","0","0"],["0","0","1"],["0","-1","0"]] },
        "window": { "radius": 1, "inner_margin": 0 }, "task": "check-lie" }"#;
    let (code, report, stderr) = run_config("lie_bad", bad);
    assert_eq!(code, 1);
    assert_eq!(report["pass"], false);
    let jacobi = report["verdicts"].as_array().unwrap().iter().find(|v| v["name"] == "jacobi").unwrap();
    assert!(jacobi["detail"].as_str().unwrap().starts_with("witness ("));
    assert!(stderr.contains("FAIL"));
}

#[test]
fn witnesses_and_center_square_tasks() {
    let gw = r#"{ "schema_version": 1, "algebra": { "family": "generalized_witt", "pairing": [["1","0"],["0","1"]] },
        "window": { "radius": 3, "inner_margin": 1 }, "task": "witnesses" }"#;
    let (code, report, _) = run_config("witnesses", gw);
    assert_eq!(code, 0, "{report}");
    let cs = format!(r#"{{ "schema_version": 1, "algebra": {B1}, "window": {{ "radius": 3, "inner_margin": 1 }}, "task": "center-square" }}"#);
    let (code, report, _) = run_config("center_square", &cs);
    assert_eq!(code, 0, "{report}");
}

#[test]
fn solve_half_derivations_reports_the_verdict() {
    let cfg = r#"{ "schema_version": 1, "algebra": { "family": "block", "f": [["0","-1"],["1","0"]] },
        "window": { "radius": 3, "inner_margin": 2 }, "task": "solve-half-derivations",
        "expect": { "verdict": "Δ = span{id, α}" } }"#;
    let (code, report, _) = run_config("solve", cfg);
    assert_eq!(code, 0, "{report}");
    assert_eq!(report["result"]["verdict"], "Δ = span{id, α}");

    // Other values of δ are reported without predictions and never pass.
    let path = write_config("solve_delta", cfg);
    let out = tpw(&["run", "--config", path.to_str().unwrap(), "--delta", "1", "--json-only"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stderr.is_empty());
}

#[test]
fn verify_structure_on_single_idempotent() {
    let cfg = r#"{ "schema_version": 1, "algebra": { "family": "block", "f": [["0","-1"],["1","0"]] },
        "window": { "radius": 2, "inner_margin": 1 }, "task": "verify-structure",
        "product": { "variant": "single_idempotent" },
        "require": ["commutative", "associative", "trans_leibniz", "poisson_leibniz"] }"#;
    let (code, report, _) = run_config("idempotent", cfg);
    assert_eq!(code, 0, "{report}");
}

#[test]
fn config_errors_name_the_field() {
    let cfg = format!(r#"{{ "schema_version": 1, "algebra": {B1}, "window": {{ "radius": 2, "inner_margin": 1 }}, "task": "check-lie", "radius": 3 }}"#);
    let (code, _, stderr) = run_config("unknown_field", &cfg);
    assert_eq!(code, 2);
    assert!(stderr.contains("radius"), "{stderr}");

    let cfg = format!(r#"{{ "schema_version": 1, "algebra": {B1}, "window": {{ "radius": 2, "inner_margin": 3 }}, "task": "check-lie" }}"#);
    let (code, _, stderr) = run_config("bad_window", &cfg);
    assert_eq!(code, 2);
    assert!(stderr.contains("window"), "{stderr}");

    let cfg = format!(r#"{{ "schema_version": 2, "algebra": {B1}, "window": {{ "radius": 2, "inner_margin": 1 }}, "task": "check-lie" }}"#);
    assert!(matches!(JobConfig::from_json(&cfg), Err(JobError::Config(m)) if m.contains("schema_version")));
}

#[test]
fn unknown_limit_from_environment() {
    let path = write_config(
        "limit",
        r#"{ "schema_version": 1, "algebra": { "family": "block", "f": [["0","-1"],["1","0"]] },
            "window": { "radius": 3, "inner_margin": 2 }, "task": "solve-half-derivations" }"#,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_tpw"))
        .args(["run", "--config", path.to_str().unwrap()])
        .env(tpw_cli::MAX_UNKNOWNS_ENV, "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("max_unknowns = 10") && stderr.contains("49"), "{stderr}");
}

#[test]
fn bundled_suites() {
    assert_eq!(suite_configs(Suite::ThmA).len(), 2);
    assert_eq!(suite_configs(Suite::ThmB).len(), 3);
    assert_eq!(suite_configs(Suite::All).len(), 5);
    let out = tpw(&["reproduce", "--suite", "thmB", "--json-only"]);
    assert_eq!(out.status.code(), Some(0));
    let reports: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 3);
    assert!(no_floats(&reports));
    let a = reproduce(Suite::ThmA).unwrap();
    assert!(a.iter().all(|r| r.pass));
}

#[test]
fn reports_are_deterministic() {
    for cfg in suite_configs(Suite::ThmB) {
        let first = run(&cfg).unwrap();
        let second = run(&cfg).unwrap();
        assert_eq!(first.deterministic_json(), second.deterministic_json());
        assert!(no_floats(&first.deterministic_json()));
    }
    let mutations = suite_configs(Suite::ThmA).into_iter().find(|c| c.random_mutations.is_some()).unwrap();
    assert_eq!(run(&mutations).unwrap().deterministic_json(), run(&mutations).unwrap().deterministic_json());
}

#[test]
fn schema_lists_every_config_field() {
    let schema: Value = serde_json::from_str(include_str!("../schema/job_config.schema.json")).unwrap();
    let props = schema["properties"].as_object().unwrap();
    for cfg in suite_configs(Suite::All) {
        let mut v = serde_json::to_value(&cfg).unwrap();
        for key in v.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "schema misses `{key}`");
        }
        let limits = v["limits"].as_object_mut().unwrap();
        for key in limits.keys() {
            assert!(props["limits"]["properties"].get(key).is_some(), "schema misses limits.{key}");
        }
    }
    // A config using every optional field parses.
    let full = r#"{ "schema_version": 1, "name": "x", "algebra": { "family": "witt_type", "f": ["1"] },
        "window": { "radius": 2, "inner_margin": 1 }, "delta": "1/2", "task": "verify-structure", "degree_bound": 1,
        "product": { "variant": "zero" }, "random_mutations": { "count": 1, "max_terms": 2, "support_radius": 1 },
        "require": ["commutative"], "expect": { "failing": ["poisson_leibniz"] }, "seed": 3, "samples": 2,
        "limits": { "max_unknowns": 100, "max_triples": 1000 } }"#;
    let cfg = JobConfig::from_json(full).unwrap();
    for key in serde_json::to_value(&cfg).unwrap().as_object().unwrap().keys() {
        assert!(props.contains_key(key), "schema misses `{key}`");
    }
}
