use std::path::Path;
use std::process::{Command, Output};

fn fockbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockbench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn help_and_usage_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fockbench(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(fockbench(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(fockbench(dir.path(), &["verify", "missing.json"]).status.code(), Some(2));
}

#[test]
fn built_space_round_trips_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for args in [
        &["deform", "--kind", "q", "-q", "-0.5", "-d", "2", "-N", "3", "--out", "q.json"][..],
        &["build", "q.json", "--out", "space.json"],
        &["verify", "space.json", "--report", "verify.json"],
        &["opalg", "space.json", "--which", "E_A*,E", "--report", "opalg.json"],
    ] {
        let out = fockbench(p, args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}

#[test]
fn negative_verdicts_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = fockbench(p, &["subproduct", "example", "diagonal", "-d", "3", "-N", "3", "--out", "chain.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fockbench(p, &["subproduct", "certify", "chain.json"]).status.code(), Some(1));

    std::fs::write(p.join("odd.json"), "[1, 0.5, 1]\n").unwrap();
    assert_eq!(fockbench(p, &["onemode", "--moments", "odd.json"]).status.code(), Some(1));
}

#[test]
fn growth_table_is_written_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = fockbench(p, &["demo", "kappaunb", "--param", "20", "--csv", "t.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(p.join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains(','));
    assert_eq!(lines.count(), 20);
}
