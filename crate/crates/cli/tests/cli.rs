use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mbb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbb")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn generate_then_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbb(dir.path(), &["generate", "--kind", "complete", "--n-u", "3", "--n-v", "4", "-o", "g.txt"]);
    assert!(o.status.success());
    let o = mbb(dir.path(), &["exact", "g.txt"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["left"].as_array().unwrap().len(), 3);
}

#[test]
fn solve_sdp_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mbb(dir.path(), &["generate", "--n", "8", "--k", "2", "--p", "0", "--seed", "1", "-o", "g.txt"]).status.success());
    let ok = mbb(dir.path(), &["solve-sdp", "g.txt", "--k", "2", "-o", "m.txt"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(fs::metadata(dir.path().join("m.txt")).is_ok());
    let bad = mbb(dir.path(), &["solve-sdp", "g.txt", "--k", "5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("INFEASIBLE"));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mbb(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(mbb(dir.path(), &["exact", "missing.txt"]).status.code(), Some(1));
    fs::write(dir.path().join("bad.txt"), "2 2 1\n0 5\n").unwrap();
    assert_eq!(mbb(dir.path(), &["exact", "bad.txt"]).status.code(), Some(1));
    assert_eq!(mbb(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn pipeline_report_is_verified() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mbb(dir.path(), &["generate", "--n", "10", "--k", "3", "--p", "0.2", "--seed", "4", "-o", "g.txt"]).status.success());
    let o = mbb(dir.path(), &["pipeline", "g.txt", "--seed", "3", "--trials", "200"]);
    assert!(o.status.success());
    let report: mbb::pipeline::RunReport = serde_json::from_str(&stdout(&o)).unwrap();
    let g = mbb::graph::parse_graph(&fs::read_to_string(dir.path().join("g.txt")).unwrap()).unwrap();
    assert!(report.verify(&g));
    assert!(report.best.size() >= 3);
}

#[test]
fn bench_with_empty_spec_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.json"), r#"{"instances": []}"#).unwrap();
    assert!(mbb(dir.path(), &["bench", "spec.json", "-o", "out"]).status.success());
    let csv = fs::read_to_string(dir.path().join("out/aggregate.csv")).unwrap();
    assert_eq!(csv.trim(), "instance,n,planted_k,found_size,exact_size,method,time");
}
