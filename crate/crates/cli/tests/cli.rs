//! End-to-end tests of the `tmfix` binary: outputs, determinism and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tmfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmfix")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulates a small corpus into `dir` and returns the log path.
fn small_corpus(dir: &Path, seed: u64) -> PathBuf {
    let cfg = dir.join(format!("sim{seed}.json"));
    std::fs::write(&cfg, format!("{{\"seed\": {seed}, \"n_sessions\": 30}}")).unwrap();
    let out = dir.join(format!("out{seed}"));
    let o = tmfix(&["simulate", "--config", s(&cfg), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.join("log.jsonl")
}

#[test]
fn simulate_is_deterministic_and_truth_covers_every_session() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_corpus(dir.path(), 4);
    let cfg = dir.path().join("sim4.json");
    let again = dir.path().join("again");
    assert_eq!(code(&tmfix(&["simulate", "--config", s(&cfg), "--out-dir", s(&again)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(again.join("log.jsonl")).unwrap());
    let truth_a = std::fs::read(a.with_file_name("truth.json")).unwrap();
    assert_eq!(truth_a, std::fs::read(again.join("truth.json")).unwrap());

    let truth: Value = serde_json::from_slice(&truth_a).unwrap();
    let sessions = truth["sessions"].as_object().unwrap();
    assert_eq!(sessions.len(), 30);
    assert!(sessions.values().all(|t| !t["interest"].as_array().unwrap().is_empty()));
}

#[test]
fn simulate_rejects_missing_or_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&tmfix(&["simulate", "--config", "/no/such/sim.json", "--out-dir", s(&out)])), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"unfixated_rate\": 1.5}").unwrap();
    let o = tmfix(&["simulate", "--config", s(&bad), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unfixated_rate"));
}

#[test]
fn analyze_golden_fixture_matches_committed_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = tmfix(&["analyze", "--input", s(&golden("session.jsonl")), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(golden("report.json")).unwrap());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("sessions 1  searches 2  clicks 2"), "{table}");
    assert!(table.contains("found 7.50 s (n=4)  other 3.00 s (n=2)"), "{table}");
    assert!(table.contains("100.00%"), "{table}");
}

#[test]
fn analyze_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "# nothing here\n").unwrap();
    assert_eq!(code(&tmfix(&["analyze", "--input", s(&empty)])), 3);
    assert_eq!(code(&tmfix(&["analyze", "--input", "/no/such/log.jsonl"])), 2);

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"type\":\"query\"}\n").unwrap();
    let o = tmfix(&["analyze", "--input", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let unknown = tmfix(&["analyze", "--input", s(&golden("session.jsonl")), "--session", "g0"]);
    assert_eq!(code(&unknown), 4);
}

#[test]
fn extract_with_zero_threshold_ranks_every_candidate() {
    let o = tmfix(&[
        "extract", "--input", s(&golden("session.jsonl")), "--session", "g1", "--policy", "absolute",
        "--absolute-ms", "0", "--floor-ms", "0",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let terms: Vec<(String, u64)> = v["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["stem"].as_str().unwrap().to_string(), t["rank"].as_u64().unwrap()))
        .collect();
    let expected = ["sozialwissenschaft", "famili", "armut", "bildung", "tabell", "wett"];
    assert_eq!(terms.iter().map(|t| t.0.as_str()).collect::<Vec<_>>(), expected);
    assert_eq!(terms.iter().map(|t| t.1).collect::<Vec<_>>(), (1..=6).collect::<Vec<_>>());
}

#[test]
fn extract_exit_codes() {
    let log = golden("session.jsonl");
    assert_eq!(code(&tmfix(&["extract", "--input", s(&log), "--session", "nope"])), 4);
    assert_eq!(code(&tmfix(&["extract", "--input", s(&log), "--session", "g1", "--policy", "absolute"])), 2);
    assert_eq!(code(&tmfix(&["extract", "--input", s(&log), "--session", "g1", "--factor", "0.5"])), 2);
}

#[test]
fn evaluate_against_own_output_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let log = small_corpus(dir.path(), 6);
    let truth: Value = serde_json::from_slice(&std::fs::read(log.with_file_name("truth.json")).unwrap()).unwrap();

    // Replace the planted interest with what the extractor returns.
    let mut own = truth.clone();
    for (id, t) in own["sessions"].as_object_mut().unwrap() {
        let o = tmfix(&["extract", "--input", s(&log), "--session", id]);
        assert_eq!(code(&o), 0);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        let stems: Vec<Value> = v["terms"].as_array().unwrap().iter().map(|x| x["stem"].clone()).collect();
        t["interest"] = Value::Array(stems);
        t["engaged"] = Value::Bool(true);
    }
    let own_path = dir.path().join("own.json");
    std::fs::write(&own_path, serde_json::to_string(&own).unwrap()).unwrap();
    let out = dir.path().join("eval.json");
    let o = tmfix(&["evaluate", "--input", s(&log), "--truth", s(&own_path), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["macro_precision"], 1.0);
    assert_eq!(r["macro_recall"], 1.0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("macro F1         1.0000"));
}

#[test]
fn evaluate_rejects_truth_of_another_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let log = small_corpus(dir.path(), 7);
    let other = small_corpus(dir.path(), 8);
    let o = tmfix(&["evaluate", "--input", s(&log), "--truth", s(&other.with_file_name("truth.json"))]);
    assert_eq!(code(&o), 2);
    let fine = tmfix(&["evaluate", "--input", s(&log), "--truth", s(&log.with_file_name("truth.json"))]);
    assert_eq!(code(&fine), 0);

    // A truth file naming sessions the log does not have.
    let golden_truth = dir.path().join("g.json");
    std::fs::write(&golden_truth, "{\"rng\":\"ChaCha8\",\"seed\":0,\"sessions\":{\"zz\":{\"engaged\":true,\"interest\":[],\"documents\":{}}}}").unwrap();
    assert_eq!(code(&tmfix(&["evaluate", "--input", s(&golden("session.jsonl")), "--truth", s(&golden_truth)])), 2);
}
