use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn knotenum(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knotenum"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = knotenum(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn count(doc: &Value, p1: u64, p2: u64) -> Option<String> {
    doc["result"]["entries"]
        .as_array()?
        .iter()
        .find(|e| e["p1"] == p1 && e["p2"] == p2)
        .and_then(|e| e["count"].as_str().map(String::from))
}

fn coefficient(doc: &Value, k: usize) -> String {
    doc["result"]["coefficients"][k].as_str().unwrap().to_string()
}

#[test]
fn enumerate_small_orders() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["enumerate", "--p", "6", "--out", "t.json"], dir.path());
    let doc = read(&dir.path().join("t.json"));
    assert_eq!(count(&doc, 6, 0).as_deref(), Some("13396"));
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["config"]["p"], 6);

    let out = ok(&["enumerate", "--p", "0"], dir.path());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["entries"].as_array().unwrap().len(), 1);
    assert_eq!(count(&doc, 0, 0).as_deref(), Some("1"));
}

#[test]
fn residue_runs_combine_to_exact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["enumerate", "--p", "8", "--mod", "4294967296", "--out", "a.json"], d);
    ok(&["enumerate", "--p", "8", "--mod", "4294967295", "--out", "b.json"], d);
    ok(&["enumerate", "--p", "8", "--out", "x.json"], d);
    ok(&["combine", "a.json", "b.json", "--out", "c.json"], d);
    let combined = read(&d.join("c.json"));
    let exact = read(&d.join("x.json"));
    assert_eq!(combined["result"]["entries"], exact["result"]["entries"]);
}

#[test]
fn outputs_are_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["enumerate", "--p", "7", "--tangency-max", "2", "--cache-dir", "cache"];
    let first = ok(&args, d).stdout;
    let cached = fs::read_dir(d.join("cache")).unwrap().count();
    assert_eq!(cached, 1, "one finished table, no leftover checkpoint");
    let second = ok(&args, d).stdout;
    assert_eq!(first, second);
    let uncached = ok(&["enumerate", "--p", "7", "--tangency-max", "2", "--threads", "1"], d).stdout;
    let a: Value = serde_json::from_slice(&first).unwrap();
    let b: Value = serde_json::from_slice(&uncached).unwrap();
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn derive_from_fixture_and_from_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["derive", "--fixture", "--out", "fixture"], d);
    let s2 = read(&d.join("fixture/sigma2.json"));
    assert_eq!(s2["result"]["order"], 22);
    assert_eq!(coefficient(&s2, 22), "19499226668816");

    ok(&["enumerate", "--p", "9", "--out", "g.json"], d);
    ok(&["enumerate", "--p", "9", "--first-return", "--out", "s.json"], d);
    ok(&["derive", "--input", "g.json", "--out", "derived"], d);
    let s1 = read(&d.join("derived/sigma1.json"));
    let direct = read(&d.join("s.json"));
    for p in 1..=9 {
        assert_eq!(Some(coefficient(&s1, p)), count(&direct, p as u64, 0), "p = {p}");
    }

    fs::write(d.join("one.json"), r#"{"order": 0, "coefficients": ["1"]}"#).unwrap();
    let out = ok(&["derive", "--input", "one.json"], d);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["sigma1"]["coefficients"], serde_json::json!(["0"]));
    assert_eq!(doc["result"]["sigma2"]["coefficients"], serde_json::json!(["0"]));
}

#[test]
fn flype_orders() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["flype", "--p", "8", "--out", "f8"], d);
    assert_eq!(coefficient(&read(&d.join("f8/gamma1.json")), 8), "382");
    let out = ok(&["flype", "--p", "1"], d);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["gamma1"]["coefficients"], serde_json::json!(["0", "1"]));
    assert_eq!(doc["result"]["gamma2"]["coefficients"], serde_json::json!(["0", "0"]));
    ok(&["flype", "--p", "17", "--fixture", "--out", "f17"], d);
    assert_eq!(coefficient(&read(&d.join("f17/gamma1.json")), 17), "408448012");
}

#[test]
fn flype_reports_missing_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["enumerate", "--p", "5", "--out", "t.json"], d);
    let out = knotenum(&["flype", "--p", "5", "--input", "t.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coefficient ("));
}

#[test]
fn fit_fixture_and_geometric_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(&["fit", "--fixture", "--out", "fit.json"], d);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mu2"));
    let doc = read(&d.join("fit.json"));
    let mu = doc["result"]["log_corrected"]["mu"].as_f64().unwrap();
    assert!((11.40..=11.43).contains(&mu), "{mu}");
    let mu2 = doc["result"]["asymptotics"]["mu2"].as_f64().unwrap();
    assert!((6.56..=6.67).contains(&mu2), "{mu2}");

    let coeffs: Vec<String> = (0..20).map(|p| 3u64.pow(p).to_string()).collect();
    let series = serde_json::json!({"order": 19, "coefficients": coeffs});
    fs::write(d.join("geo.json"), series.to_string()).unwrap();
    let out = ok(&["fit", "--input", "geo.json", "--fit-window", "5..19"], d);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let mu = doc["result"]["ratio"]["mu"].as_f64().unwrap();
    assert!((mu - 3.0).abs() < 1e-9, "{mu}");
}

#[test]
fn verify_small_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        &["verify", "--p", "7", "--oracle-max", "6", "--out", "report.json"],
        dir.path(),
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("FAIL"), "{text}");
    assert_eq!(read(&dir.path().join("report.json"))["result"]["passed"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(knotenum(&["enumerate", "--p", "500"], d).status.code(), Some(2));
    assert_eq!(knotenum(&["enumerate", "--p", "3", "--mod", "1"], d).status.code(), Some(2));
    assert_eq!(knotenum(&["enumerate"], d).status.code(), Some(2));
    assert_eq!(knotenum(&["fit", "--input", "missing.json"], d).status.code(), Some(2));
    let out = knotenum(&["enumerate", "--p", "9", "--max-states", "100"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}
