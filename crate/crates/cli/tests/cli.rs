use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordsel"))
        .args(args)
        .env_remove("ORDSEL_LOG")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn sample(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../samples")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_report(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {stderr}"))
}

#[test]
fn gen_is_deterministic_and_seeded() {
    let a = bin(&["gen", "--rows", "100", "--segments", "4", "--seed", "9"]);
    let b = bin(&["gen", "--rows", "100", "--segments", "4", "--seed", "9"]);
    let c = bin(&["gen", "--rows", "100", "--segments", "4", "--seed", "10"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("c1,c2,c3"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn cost_plan_reproduces_optimize_cost() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let (cat, query) = (sample("chain_catalog.json"), sample("chain_query.json"));
    let out = bin(&["optimize", "--catalog", &cat, "--query", &query]);
    assert!(out.status.success());
    std::fs::write(&plan, &out.stdout).unwrap();
    let optimized: Value = serde_json::from_slice(&out.stdout).unwrap();
    let recost = ok_json(&["cost-plan", "--plan", path_str(&plan), "--catalog", &cat]);
    let (a, b) = (
        optimized["cost"]["total"].as_f64().unwrap(),
        recost["cost"]["total"].as_f64().unwrap(),
    );
    assert!((a - b).abs() <= 1e-9 * a.abs());
    assert!(optimized["initial_cost"]["total"].as_f64().unwrap() >= a);
}

#[test]
fn no_refine_reports_phase_one_plan() {
    let (cat, query) = (sample("chain_catalog.json"), sample("chain_query.json"));
    let v = ok_json(&["optimize", "--catalog", &cat, "--query", &query, "--no-refine", "--explain"]);
    assert_eq!(v["refined"], Value::Bool(false));
    assert_eq!(v["cost"], v["initial_cost"]);
    assert!(v["explain"]["nodes"].as_array().is_some_and(|n| !n.is_empty()));
}

#[test]
fn solve_prefix_matches_oracle() {
    let v = ok_json(&["solve-prefix", "--instance", &sample("path_instance.json"), "--oracle"]);
    assert_eq!(v["benefit"], v["oracle_benefit"]);
    assert_eq!(v["permutations"].as_array().unwrap().len(), 4);
}

#[test]
fn sort_writes_sorted_output_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("in.csv");
    let sorted = dir.path().join("out.csv");
    let metrics = dir.path().join("m.json");
    let gen = bin(&["gen", "--rows", "2000", "--segments", "20", "--seed", "1", "--output", path_str(&data)]);
    assert!(gen.status.success());
    let out = bin(&[
        "sort", "--input", path_str(&data), "--key", "c1:int,c2:int", "--known-prefix", "1",
        "--memory-records", "64", "--output", path_str(&sorted), "--metrics-out", path_str(&metrics),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut reader = csv::Reader::from_path(&sorted).unwrap();
    let keys: Vec<(i64, i64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(keys.len(), 2000);
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));

    let m: Value = serde_json::from_slice(&std::fs::read(&metrics).unwrap()).unwrap();
    assert_eq!(m["metrics"]["records"], 2000);
    assert!(m["metrics"]["first_output_index"].as_u64().unwrap() <= 100);
}

#[test]
fn unsorted_prefix_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("in.csv");
    std::fs::write(&data, "a,b\n2,1\n1,5\n").unwrap();
    let out = bin(&["sort", "--input", path_str(&data), "--key", "a:int,b:int", "--known-prefix", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_report(&out)["code"], "validation");
}

#[test]
fn missing_file_is_an_io_error() {
    let out = bin(&["solve-prefix", "--instance", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
    let report = error_report(&out);
    assert_eq!(report["code"], "io");
    assert_eq!(report["path"], "/nonexistent/instance.json");
}

#[test]
fn malformed_json_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = bin(&["solve-prefix", "--instance", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_report(&out)["code"], "validation");
}

#[test]
fn usage_errors_exit_one() {
    let out = bin(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_report(&out)["code"], "usage");
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn bench_writes_one_row_per_algorithm_and_segment_count() {
    let v = bin(&["bench", "--rows", "2048", "--segments", "1,16", "--memory-records", "128"]);
    assert!(v.status.success());
    let mut reader = csv::Reader::from_reader(v.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
}
