use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dynclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynclust")).args(args).output().expect("binary runs")
}

fn gen_stream(dir: &Path, n: usize, insertions: usize) -> String {
    let path = dir.join("stream.txt");
    let p = path.to_str().unwrap().to_string();
    let out = dynclust(&["gen", "--n", &n.to_string(), "--insertions", &insertions.to_string(), "--seed", "5", "--out", &p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("one JSON object per line"))
        .collect()
}

#[test]
fn incremental_emits_a_record_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_stream(dir.path(), 20, 15);
    let out = dynclust(&["run", "--input", &input, "--k", "2", "--oracle"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = lines(&out);
    // Step 0 plus 19 tree edges and 15 insertions.
    assert_eq!(recs.len(), 35);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r["step"], i);
        assert!(r["c_size"].as_u64().unwrap() <= 2);
    }
    let last = recs.last().unwrap();
    assert!(last["ratio"].as_f64().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn verify_and_baseline_agree_on_record_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_stream(dir.path(), 25, 20);
    for mode in ["verify", "static-baseline"] {
        let out = dynclust(&["run", "--mode", mode, "--input", &input, "--k", "1", "--z", "2"]);
        assert!(out.status.success(), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(lines(&out).len(), 45, "{mode}");
    }
}

#[test]
fn bench_writes_a_summary_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_stream(dir.path(), 30, 30);
    let summary = dir.path().join("bench.json");
    let out = dynclust(&["run", "--mode", "bench", "--input", &input, "--out", summary.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(fs::read_to_string(summary).unwrap().trim()).unwrap();
    assert_eq!(v["steps"], 59);
    assert_eq!(v["restarts"], v["sigma_inc"]);
}

#[test]
fn parse_errors_exit_2_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "n 3\ne 0 1 1\n# comment\ne 1 7 1\n").unwrap();
    let out = dynclust(&["run", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn bad_parameters_fail() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_stream(dir.path(), 10, 0);
    let out = dynclust(&["run", "--input", &input, "--k", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = dynclust(&["run", "--input", &input, "--eps-red", "0.7"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_on_a_hundred_insertions() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_stream(dir.path(), 40, 100);
    let out = dynclust(&["run", "--mode", "verify", "--input", &input, "--k", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(lines(&out).len(), 140);
}

#[test]
fn baseline_cost_is_comparable_to_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_stream(dir.path(), 30, 40);
    let last_cost = |mode: &str| {
        let out = dynclust(&["run", "--mode", mode, "--input", &input, "--k", "2"]);
        assert!(out.status.success(), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
        lines(&out).last().unwrap()["cost_g"].as_f64().unwrap()
    };
    let (inc, base) = (last_cost("incremental"), last_cost("static-baseline"));
    assert!(inc <= 60.0 * base.max(1.0) && base <= 60.0 * inc.max(1.0), "{inc} vs {base}");
}

#[test]
fn bench_on_an_empty_stream() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.txt");
    fs::write(&path, "n 5\n").unwrap();
    let out = dynclust(&["run", "--mode", "bench", "--input", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
    assert_eq!(v["steps"], 0);
    assert_eq!(v["incremental"]["measured"], 0);
}

#[test]
fn bench_counters_stay_within_the_phase_bound() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_stream(dir.path(), 60, 150);
    let out = dynclust(&["run", "--mode", "bench", "--input", &input, "--k", "2", "--static-samples", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
    assert!(v["c1"].as_f64().unwrap() <= 4.0);
    assert!(v["c2"].as_f64().unwrap() <= 4.0);
}
