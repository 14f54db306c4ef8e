use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn raptune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raptune")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn plant(name: &str) -> String {
    data(&format!("plants/{name}.json")).display().to_string()
}

#[test]
fn identify_analytic_first_order() {
    let out = raptune(&["identify", "--plant", &plant("gc"), "--method", "analytic"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["class"], "C");
    assert!((v["omega"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-6);
    assert!((v["magnitude"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(v["gamma_deg"].as_f64(), Some(-120.0));
}

#[test]
fn tune_by_relay() {
    let out = raptune(&["tune", "--plant", &plant("gb"), "--omega-r", "0.169"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["class"], "B");
    let kp = v["kp"].as_f64().unwrap();
    assert!((kp - 3.82).abs() / 3.82 < 0.02, "kp {kp}");
    assert_eq!(v["point"]["method"], "relay");
}

#[test]
fn tune_output_is_a_controller_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = raptune(&[
        "--seed-output-dir",
        dir.path().to_str().unwrap(),
        "tune",
        "--plant",
        &plant("gc"),
        "--ratio",
        "0.1",
        "--method",
        "analytic",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let ctrl = dir.path().join("tune.json");
    let sim = raptune(&[
        "--seed-output-dir",
        dir.path().to_str().unwrap(),
        "simulate",
        "--plant",
        &plant("gc"),
        "--controller",
        ctrl.to_str().unwrap(),
    ]);
    assert_eq!(sim.status.code(), Some(0), "{}", String::from_utf8_lossy(&sim.stderr));
    let report = json(&sim);
    assert_eq!(report["status"], "settled");
    let (ts, ns) = (report["t_s"].as_f64().unwrap(), report["n_s"].as_f64().unwrap());
    let wr = 0.1 * 3f64.sqrt();
    assert!((ns - wr * ts / (2.0 * std::f64::consts::PI)).abs() < 1e-4 * ns);
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    assert!(csv.starts_with("t,r,e,u,y\n"));
}

#[test]
fn relay_run_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = raptune(&[
        "simulate-relay",
        "--plant",
        &plant("gb"),
        "--gamma",
        "-60",
        "--decimate",
        "50",
        "--seed-output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for key in ["A", "T", "bias", "converged", "cycles_used"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["converged"], true);
    let csv = std::fs::read_to_string(dir.path().join("simulate_relay.csv")).unwrap();
    assert!(csv.starts_with("t,r,e,u,y\n"));
    assert!(csv.lines().count() > 10);
}

#[test]
fn relay_without_oscillation_is_an_analysis_failure() {
    let out = raptune(&["simulate-relay", "--plant", &plant("gc"), "--gamma", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bode_csv_has_six_significant_digits() {
    let out = raptune(&["freqresp", "--plant", &plant("gc"), "--band", "0.1,10", "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "omega,magnitude_db,phase_deg\n0.1,-0.0432137,-5.71059\n1,-3.0103,-45\n10,-20.0432,-84.2894\n");
}

#[test]
fn nyquist_json() {
    let out = raptune(&["freqresp", "--plant", &plant("gc"), "--kind", "nyquist", "--points", "2", "--format", "json"]);
    let v = json(&out);
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert!(v[0]["re"].is_number() && v[0]["im"].is_number());
}

#[test]
fn margins_of_tuned_loop() {
    let dir = tempfile::tempdir().unwrap();
    let ctrl = dir.path().join("c.json");
    std::fs::write(&ctrl, r#"{"kp": 2.0, "kr1": 0.0, "kr2": 0.0, "omega_r": 0.5}"#).unwrap();
    let out = raptune(&["margins", "--plant", &plant("ga"), "--controller", ctrl.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["gain_crossover"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["phase_crossover"].as_f64().unwrap() - 1.306542).abs() < 1e-5);
    assert!(v["gain_margin"].as_f64().is_some());
}

#[test]
fn margins_without_crossover_exit_1() {
    let out = raptune(&["margins", "--plant", &plant("gc")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn foi_check_sweep() {
    let out = raptune(&["foi-check", "--gamma", "-120", "--points", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,magnitude_db,phase_deg"));
    let worst = lines
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .map(|p| (p + 120.0).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 2.0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(raptune(&["identify", "--bogus"]).status.code(), Some(2));
    assert_eq!(raptune(&["identify", "--plant", "/nonexistent/plant.json"]).status.code(), Some(2));
    assert_eq!(raptune(&["foi-check", "--gamma", "-30"]).status.code(), Some(2));
    assert_eq!(raptune(&["--step", "-1", "identify", "--plant", &plant("gc")]).status.code(), Some(2));
    assert_eq!(raptune(&["batch", "--spec", "/nonexistent/spec.json"]).status.code(), Some(2));
}

#[test]
fn resonance_above_identified_frequency_exit_1() {
    let out = raptune(&["tune", "--plant", &plant("gc"), "--omega-r", "5", "--method", "analytic"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn batch_empty_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let body = format!(r#"{{"plants": [{{"name": "gc", "plant": "{}"}}], "ratios": []}}"#, plant("gc"));
    std::fs::write(&spec, body).unwrap();
    let out_dir = dir.path().join("out");
    let out = raptune(&["batch", "--spec", spec.to_str().unwrap(), "--seed-output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["rows"], 0);
    let csv = std::fs::read_to_string(out_dir.join("gc.csv")).unwrap();
    assert_eq!(csv, "omega_r,xi,kp,kr1,kr2,t_s,n_s,m_o\n");
}

#[test]
fn batch_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let body = format!(
        r#"{{"plants": [{{"name": "g1", "plant": "{}"}}, {{"name": "g3", "plant": "{}"}}], "ratios": [0.3, 0.9]}}"#,
        plant("g1_t1"),
        plant("g3_a0.7")
    );
    std::fs::write(&spec, body).unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = raptune(&["batch", "--spec", spec.to_str().unwrap(), "--seed-output-dir", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        ["g1.csv", "g3.csv", "index.json"].map(|f| std::fs::read(out_dir.join(f)).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let table = String::from_utf8(a[0].clone()).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().all(|l| l.split(',').count() == 8));
}
