//! End-to-end runs of the `cutoff` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cutoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutoff")).args(args).output().unwrap()
}

fn channel(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (headers, rows)
}

fn value(rows: &[Vec<String>], quantity: &str) -> f64 {
    rows.iter().find(|r| r[0] == quantity).unwrap()[3].parse().unwrap()
}

#[test]
fn noiseless_and_bsc_cutoff_rates() {
    let dir = tempfile::tempdir().unwrap();
    let nl = channel(dir.path(), "nl.json", r#"{"transition": [[1, 0], [0, 1]]}"#);
    let out = cutoff(&["dmc", &nl, "--rho-grid", "0.5,1"]);
    assert!(out.status.success());
    let (headers, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(headers, ["quantity", "rho", "rate", "value_nats"]);
    assert!((value(&rows, "r0") - 2f64.ln()).abs() < 1e-12);

    let bsc = channel(dir.path(), "bsc.json", r#"{"transition": [[0.9, 0.1], [0.1, 0.9]]}"#);
    let out = cutoff(&["dmc", &bsc]);
    let (_, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert!((value(&rows, "r0") - 0.223_143_5).abs() < 1e-6);
    assert!(rows.iter().any(|r| r[0] == "random_coding"));
    assert!(rows.iter().any(|r| r[0] == "sphere_packing"));
}

#[test]
fn cost_constrained_channel_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = channel(
        dir.path(),
        "c.json",
        r#"{"transition": [[0.9, 0.1], [0.2, 0.8]], "cost": [0, 1], "budget": 0.25}"#,
    );
    let json = dir.path().join("c_out.json");
    let out = cutoff(&["dmc", &f, "--out", json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(doc["cost_constrained"], true);
    let rows = doc["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["quantity"] != "sphere_packing"));
}

#[test]
fn malformed_channel_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = channel(dir.path(), "bad.json", r#"{"transition": [[0.5, 0.5], [0.9, 0.07]]}"#);
    let out = cutoff(&["dmc", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1 sums to 0.97"));

    let half = channel(dir.path(), "half.json", r#"{"transition": [[1, 0]], "cost": [1]}"#);
    assert_eq!(cutoff(&["dmc", &half]).status.code(), Some(2));
    assert_eq!(cutoff(&["dmc", "/nonexistent/channel.json"]).status.code(), Some(2));
}

#[test]
fn duality_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = cutoff(&["verify-duality", "--trials", "20", "--tol", "1e-4", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["reports"][0]["trials"].as_array().unwrap().len(), 20);

    assert_eq!(cutoff(&["verify-duality", "--trials", "0"]).status.code(), Some(2));
    // No optimiser reaches a zero gap, so an impossible tolerance fails.
    let out = cutoff(&["verify-duality", "--trials", "3", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn figure_one_rows() {
    let out = cutoff(&["ricean", "--figure", "1", "--d-grid", "0,1,2,4"]);
    assert!(out.status.success());
    let (headers, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(headers, ["d", "capacity_constant_nats", "cutoff_constant_nats", "gap_nats"]);
    let first: Vec<f64> = rows[0].iter().map(|s| s.parse().unwrap()).collect();
    let gamma = 0.577_215_664_901_532_9;
    assert_eq!(first[0], 0.0);
    assert!((first[1] + gamma + 1.0).abs() < 1e-14);
    assert!((first[2] + std::f64::consts::TAU.ln()).abs() < 1e-14);
    assert!((first[3] - 0.260_661).abs() < 1e-6);
    assert_eq!(rows.len(), 4);
}

#[test]
fn figure_two_rows() {
    let out = cutoff(&["sideinfo", "--figure", "2", "--eps2-grid", "0.1,0.5,1"]);
    assert!(out.status.success());
    let (headers, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(headers, ["eps2", "capacity_constant_nats", "cutoff_constant_nats", "gap_nats"]);
    let last: f64 = rows[2][2].parse().unwrap();
    assert!((last + std::f64::consts::TAU.ln()).abs() < 1e-14);
    assert_eq!(cutoff(&["sideinfo", "--figure", "1"]).status.code(), Some(2));
}

#[test]
fn ricean_sandwich_csv_and_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("r.csv");
    let json_path = dir.path().join("r.json");
    for p in [&csv_path, &json_path] {
        let out = cutoff(&["ricean", "--d-grid", "0,1", "--snr-grid", "log:1e6:1e12:4", "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (headers, rows) = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(headers, ["snr", "lower_nats", "upper_nats", "asymptote_nats", "d", "sigma2"]);
    assert_eq!(rows.len(), 8);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    for (row, obj) in rows.iter().zip(doc["rows"].as_array().unwrap()) {
        let lower: f64 = row[1].parse().unwrap();
        let upper: f64 = row[2].parse().unwrap();
        assert!(lower <= upper);
        // CSV at 17 significant digits and JSON agree bit for bit.
        assert_eq!(lower, obj["lower_nats"].as_f64().unwrap());
        assert_eq!(upper, obj["upper_nats"].as_f64().unwrap());
    }
    assert_eq!(doc["output_density"].as_array().unwrap().len(), 8);
}

#[test]
fn infeasible_output_density_exits_1() {
    let out = cutoff(&["ricean", "--d-grid", "0", "--snr-grid", "1e8", "--delta", "0.01", "--m1", "1e4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("is not positive for delta = 0.01"));
    assert_eq!(cutoff(&["ricean", "--delta", "0.01"]).status.code(), Some(2));
}

#[test]
fn invalid_grids_exit_2() {
    assert_eq!(cutoff(&["ricean", "--snr-grid", "1e8,1e6"]).status.code(), Some(2));
    assert_eq!(cutoff(&["sideinfo", "--eps2-grid", "0,0.5"]).status.code(), Some(2));
    assert_eq!(cutoff(&["sideinfo", "--eps2-grid", "0.5,2"]).status.code(), Some(2));
    assert_eq!(cutoff(&["ricean", "--sigma2", "-1"]).status.code(), Some(2));
}

#[test]
fn sideinfo_curve() {
    let out = cutoff(&["sideinfo", "--eps2-grid", "0.5,1", "--snr-grid", "1e8,1e10"]);
    assert!(out.status.success());
    let (headers, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(headers, ["eps2", "snr", "lower_nats", "upper_nats", "asymptote_nats", "capacity_constant_nats"]);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r[2].parse::<f64>().unwrap() <= r[3].parse::<f64>().unwrap());
    }
}
