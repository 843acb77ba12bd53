//! End-to-end runs of the `qtf` binary: exit codes, output files, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qtf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtf"))
        .args(args)
        .env_remove("QTF_CAP")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn analyze_c5_reports_the_quotient() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "c5.json",
        r#"{"n":5,"edges":[[0,1],[1,2],[2,3],[3,4],[4,0]],"basepoint":0}"#,
    );
    let out = qtf(&["analyze", "--input", &g]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["summary"]["failed"], 0);
    // C5 from 0: {0}, {1,4}, {2,3}; the quotient is a path of length 2
    assert_eq!(r["data"]["classes"], serde_json::json!([[0], [1, 4], [2, 3]]));
    assert_eq!(
        r["data"]["dist_y"],
        serde_json::json!([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    );
    assert_eq!(r["data"]["four_point_defect"], 0);
}

#[test]
fn free_norm_on_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "p.json",
        r#"{"n":4,"edges":[[0,1],[1,2],[2,3]],"basepoint":0}"#,
    );
    let v = write(dir.path(), "v.json", r#"{"coeffs":{"3":"1/2","1":"-2","0":"5"}}"#);
    let out = qtf(&["free-norm", "--input", &g, "--vector", &v]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    // 1/2 cancels against -2 at vertex 1 (cost 1), the remaining -3/2 goes to 0
    assert_eq!(r["data"]["norm"], "5/2");
    assert_eq!(
        r["warnings"].as_array().unwrap().len(),
        1,
        "basepoint coefficient dropped"
    );
}

#[test]
fn output_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = qtf(&["verify-action", "cor73", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r["command"]["scenario"], "cor73");
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "bad.json", "{\"n\": 3, \"edges\": [[0,1]");
    assert_eq!(qtf(&["analyze", "--input", &g]).status.code(), Some(2));
    let disconnected = write(dir.path(), "d.json", r#"{"n":3,"edges":[[0,1]],"basepoint":0}"#);
    assert_eq!(qtf(&["analyze", "--input", &disconnected]).status.code(), Some(2));
    let g = write(dir.path(), "p.json", r#"{"n":2,"edges":[[0,1]],"basepoint":0}"#);
    let v = write(dir.path(), "v.json", r#"{"coeffs":{"7":"1"}}"#);
    assert_eq!(
        qtf(&["free-norm", "--input", &g, "--vector", &v]).status.code(),
        Some(2)
    );
    let v = write(dir.path(), "w.json", r#"{"coeffs":{"1":"x/y"}}"#);
    assert_eq!(
        qtf(&["free-norm", "--input", &g, "--vector", &v]).status.code(),
        Some(2)
    );
}

#[test]
fn unknown_scenario_and_bad_flags_exit_2() {
    assert_eq!(qtf(&["verify-action", "lemma99"]).status.code(), Some(2));
    assert_eq!(
        qtf(&["verify-action", "lemma61", "--radius", "many"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qtf(&["verify-action", "lemma61", "--group", "wreath(a,b)"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qtf(&["verify-action", "lemma24", "--group", "free:2"]).status.code(),
        Some(2)
    );
    assert_eq!(qtf(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn ball_cap_is_enforced_from_env_and_flag() {
    let over = qtf(&["verify-action", "lemma61", "--radius", "5", "--cap", "100"]);
    assert_eq!(over.status.code(), Some(2));
    let env = Command::new(env!("CARGO_BIN_EXE_qtf"))
        .args(["verify-action", "lemma61", "--radius", "5"])
        .env("QTF_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
    // the flag takes precedence over the environment
    let flag = Command::new(env!("CARGO_BIN_EXE_qtf"))
        .args(["verify-action", "lemma61", "--radius", "3", "--cap", "1000"])
        .env("QTF_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(flag.status.code(), Some(0));
}

#[test]
fn every_scenario_passes_with_defaults() {
    for s in ["lemma61", "lemma24", "lemma72", "theorem12", "cor13", "cor73"] {
        let out = qtf(&["verify-action", s]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{s}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let r = report(&out);
        assert!(r["summary"]["passed"].as_u64().unwrap() > 0);
        for c in r["checks"].as_array().unwrap() {
            assert!(!c["anchor"].as_str().unwrap().is_empty());
        }
    }
}

#[test]
fn free_product_p2_and_infinite_factor() {
    let out = qtf(&["verify-action", "lemma72", "--p", "2", "--maxlen", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let out = qtf(&[
        "verify-action",
        "lemma72",
        "--group",
        "product(free:1,cyclic:3)",
        "--maxlen",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["summary"]["skipped"], 1);
}

#[test]
fn same_seed_same_bytes_and_timing_is_opt_in() {
    let a = qtf(&["verify-action", "lemma61", "--radius", "4", "--seed", "3"]);
    let b = qtf(&["verify-action", "lemma61", "--radius", "4", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(report(&a).get("timing_ms").is_none());
    let t = qtf(&["verify-action", "cor73", "--timing"]);
    assert!(report(&t)["timing_ms"].is_u64());
}

#[test]
fn demo_writes_readable_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("corpus");
    let out = qtf(&[
        "demo",
        "--output",
        target.to_str().unwrap(),
        "--radius",
        "2",
        "--group",
        "free:3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bass = target.join("bass_serre_product_cyclic_2_cyclic_3__r4.json");
    assert!(bass.exists());
    assert!(target
        .join("bass_serre_product_cyclic_2_cyclic_3__r4.labels.json")
        .exists());
    let again = qtf(&["analyze", "--input", bass.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    // a tree quotients to itself
    let r = report(&again);
    assert_eq!(
        r["data"]["classes"].as_array().unwrap().len(),
        r["data"]["vertex_count"].as_u64().unwrap() as usize
    );
}
