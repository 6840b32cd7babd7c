use std::process::{Command, Output};

use serde_json::Value;

fn lsness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsness")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = lsness(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn value(record: &Value) -> f64 {
    record["value_re"].as_f64().unwrap()
}

#[test]
fn verify_passes_and_fails_as_configured() {
    let ok = lsness(&["verify", "--n", "3", "--eps", "1.0"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let doc: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert!(doc["results"][0]["checks"].as_array().unwrap().len() > 40);

    let zero = lsness(&["verify", "--n", "3", "--eps", "0"]);
    assert_eq!(zero.status.code(), Some(1));
    let doc: Value = serde_json::from_slice(&zero.stdout).unwrap();
    let failed: Vec<&Value> =
        doc["results"][0]["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0]["name"].as_str().unwrap().contains("unique"));

    let control = lsness(&["verify", "--negative-control"]);
    assert_eq!(control.status.code(), Some(1));
    let text = String::from_utf8_lossy(&control.stdout);
    assert!(text.contains("boundary equation"));
}

#[test]
fn exact_verify_passes() {
    let out = lsness(&["verify", "--n", "2", "--exact"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn size_limits_are_explicit() {
    let out = lsness(&["verify", "--n", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("9"));
    let out = lsness(&["ness", "--n", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_configurations_are_rejected() {
    assert_eq!(lsness(&["ness", "--n", "2", "--exact", "--basis", "orthonormal"]).status.code(), Some(2));
    assert_eq!(lsness(&["partition", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(lsness(&["observe", "--n", "4", "--obs", "current", "--x", "4"]).status.code(), Some(2));
}

#[test]
fn two_site_factor_dump() {
    let doc = json(&["ness", "--n", "2", "--eps", "1", "--exact"]);
    let entries = doc["results"].as_array().unwrap();
    assert_eq!(entries.len(), 12);
    let coherent = entries.iter().find(|e| e["row_state"] == "13" && e["col_state"] == "31").unwrap();
    // 2η = 2iε
    assert_eq!(coherent["value"], serde_json::json!([[1, 0, 0, 2]]));
    assert_eq!(doc["header"]["nonzero_entries"], 12);
}

#[test]
fn dark_state_and_single_site() {
    let doc = json(&["ness", "--n", "3", "--sector", "3", "--operator", "density"]);
    let entries = doc["results"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["row_state"], "222");
    assert_eq!(entries[0]["col_state"], "222");

    let doc = json(&["ness", "--n", "1"]);
    let entries = doc["results"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    assert!(entries.iter().all(|e| e["row"] == e["col"] && e["value"] == serde_json::json!([1.0, 0.0])));
}

#[test]
fn current_matches_partition_ratio() {
    let current = json(&["observe", "--n", "4", "--eps", "1", "--mu", "0", "--obs", "current", "--i", "1"]);
    let z = json(&["partition", "--n", "3,4", "--eps", "1", "--mu", "0"]);
    let lz: Vec<f64> = z["results"].as_array().unwrap().iter().map(|r| r["log_partition"].as_f64().unwrap()).collect();
    let expected = 2.0 * (lz[0] - lz[1]).exp();
    for r in current["results"].as_array().unwrap() {
        assert!((value(r) - expected).abs() < 1e-10 * expected);
    }
}

#[test]
fn doping_saturates() {
    let doc = json(&["observe", "--n", "4", "--obs", "doping", "--mu", "40"]);
    assert!((value(&doc["results"][0]) - 1.0).abs() < 1e-10);
    let doc = json(&["observe", "--n", "4", "--obs", "doping", "--mu", "-40"]);
    assert!(value(&doc["results"][0]) < 1e-10);
}

#[test]
fn scan_with_fit() {
    let doc = json(&["scan", "--n", "2..8", "--eps", "1", "--mu", "-40", "--fit"]);
    let fit = &doc["results"]["fits"][0];
    assert_eq!(fit["residuals"].as_array().unwrap().len(), 7);
    assert!(fit["beta1"].as_f64().unwrap().is_finite());
    assert_eq!(doc["results"]["rows"].as_array().unwrap().len(), 7);
    assert_eq!(lsness(&["scan", "--n", "2..4", "--fit"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["scan", "--n", "2..6", "--eps", "0.5,2", "--mu", "-1,0,1", "--format", "csv"];
    let a = lsness(&[&args[..], &["--jobs", "1"]].concat());
    let b = lsness(&[&args[..], &["--jobs", "4"]].concat());
    assert!(a.status.success());
    let strip = |o: &Output| {
        String::from_utf8(o.stdout.clone()).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    let c = lsness(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(b.stdout, c.stdout);
    let text = strip(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,epsilon,mu,log_partition,doping,current_1,recurrence_residual,mode,tol");
    assert_eq!(lines.count(), 5 * 2 * 3);
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out.json");
    std::fs::write(&cfg, "n = \"2..3\"\neps = 0.5\nmu = [-1.0, 1.0]\nformat = \"csv\"\n").unwrap();
    let status = lsness(&[
        "partition",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["config"]["n"], serde_json::json!([2, 3]));
    assert_eq!(doc["config"]["eps"], serde_json::json!([0.5]));
    assert_eq!(doc["config"]["format"], "json");
    assert_eq!(doc["results"].as_array().unwrap().len(), 4);
}

#[test]
fn exact_partition_agrees_with_sweep() {
    let doc = json(&["partition", "--n", "2..4", "--eps", "0.7", "--mu", "0.3", "--exact"]);
    assert_eq!(doc["passed"], true);
    let first = &doc["results"][0];
    assert!(first["polynomial"].as_str().unwrap().contains("ε^2"));
}
