use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chacon-lab")).args(args).current_dir(dir).output().unwrap()
}

fn spec(name: &str) -> String {
    format!("{}/specs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn build_chacon_exports_heights() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["build-chacon", "--n-max", "4", "--out", "towers.json"]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&dir.path().join("towers.json"));
    assert_eq!(json["tool"], "chacon-lab");
    assert_eq!(json["run_config"]["n_max"], 4);
    let heights: Vec<u64> =
        json["result"]["towers"].as_array().unwrap().iter().map(|t| t["height"].as_u64().unwrap()).collect();
    assert_eq!(heights, [1, 8, 50, 302]);
    let csv = std::fs::read_to_string(dir.path().join("towers.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(4).unwrap().starts_with("4,302,1/27,302/27"));
}

#[test]
fn nothing_is_written_without_out() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["build-chacon", "--n-max", "2"]).status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["build-chacon", "--n-max", "0"][..],
        &["build-chacon"],
        &["check-cocycle"],
        &["verify", "everything"],
        &["frobnicate"],
        &["check-cocycle", "--spec", "missing.json"],
    ] {
        assert_eq!(run(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn check_cocycle_exit_reflects_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let good = run(dir.path(), &["check-cocycle", "--spec", &spec("indicator_middle_spacer_n2.json"), "--out", "c.json"]);
    assert_eq!(good.status.code(), Some(0));
    let json = read_json(&dir.path().join("c.json"));
    assert_eq!(json["result"]["holds"], true);
    assert!(json["run_config"]["n_scan"].as_u64().is_some());
    let bad = run(dir.path(), &["check-cocycle", "--spec", &spec("zero_z2.json")]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"n_max": 3, "seed": 9}"#).unwrap();
    let out = run(dir.path(), &["build-chacon", "--config", "run.json", "--out", "a.json"]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&dir.path().join("a.json"));
    assert_eq!(json["run_config"]["n_max"], 3);
    assert_eq!(json["run_config"]["seed"], 9);

    let out = run(dir.path(), &["build-chacon", "--config", "run.json", "--n-max", "2", "--out", "b.json"]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&dir.path().join("b.json"));
    assert_eq!(json["run_config"]["n_max"], 2);
    assert_eq!(json["result"]["towers"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"n_max": 3, "colour": "red"}"#).unwrap();
    assert_eq!(run(dir.path(), &["build-chacon", "--config", "run.json"]).status.code(), Some(2));
}

#[test]
fn small_verify_run_reports_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "poisson", "--samples", "2000", "--seed", "4", "--out", "v.json"]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 1);
    let json = read_json(&dir.path().join("v.json"));
    assert_eq!(json["run_config"]["suite"], "poisson");
    assert_eq!(json["result"]["passed"], code == 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS") || stdout.contains("FAIL"));
}
