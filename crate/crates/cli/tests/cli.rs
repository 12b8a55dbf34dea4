use std::fs;

use assert_cmd::Command;
use predicates::prelude::*;
use serde_json::Value;

fn hhm() -> Command {
    Command::cargo_bin("hhm").unwrap()
}

fn json_stdout(args: &[&str]) -> Value {
    let out = hhm().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn series(doc: &Value, key: &str) -> Vec<(f64, f64)> {
    doc["series"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[key].as_f64().unwrap(), p["value"].as_f64().unwrap()))
        .collect()
}

#[test]
fn model_info_lower_bound_case() {
    let doc = json_stdout(&[
        "model-info",
        "--n",
        "4",
        "--ell",
        "1",
        "--q",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(doc["kappa"].as_f64().unwrap(), -1.5);
    let c = doc["normalization"]["c"].as_f64().unwrap();
    assert!((c - 0.5f64.sqrt()).abs() < 1e-15);
    let q = doc["normalized_q"].as_f64().unwrap();
    assert!((q - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    assert_eq!(doc["classification"], "AtLower");
}

#[test]
fn model_info_real_hyperbolic_and_above_upper() {
    hhm()
        .args(["model-info", "--n", "3", "--ell", "2", "--q", "2"])
        .assert()
        .success()
        .stdout(predicate::str::contains("AtUpper(RealHyperbolic)"));
    let out = hhm()
        .args([
            "model-info",
            "--n",
            "4",
            "--ell",
            "3",
            "--q",
            "1",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["classification"], "AboveUpper");
    assert!((doc["normalized_q"].as_f64().unwrap() - 11.0 / 3.0).abs() < 1e-14);
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa = 9"));
}

#[test]
fn invalid_parameters_exit_2() {
    hhm()
        .args(["model-info", "--n", "2", "--ell", "1", "--q", "1"])
        .assert()
        .code(2);
    hhm()
        .args(["model-info", "--n", "4", "--ell", "-1", "--q", "1"])
        .assert()
        .code(2);
    hhm()
        .args(["model-info", "--n", "4", "--ell", "1"])
        .assert()
        .code(2);
    hhm()
        .args(["eval", "theta", "--n", "3", "--ell", "2", "--q", "2"])
        .assert()
        .code(2);
}

#[test]
fn eval_theta_at_one() {
    let doc = json_stdout(&[
        "eval", "theta", "--n", "3", "--ell", "2", "--q", "2", "--grid", "1:1:1", "--format",
        "json",
    ]);
    let s = series(&doc, "r");
    assert_eq!(s.len(), 1);
    assert!((s[0].1 - 1f64.sinh().powi(2)).abs() < 1e-14);
    assert_eq!(doc["model"]["n"], 3);
    assert_eq!(doc["meta"]["quantity"], "theta");
}

#[test]
fn eval_sigma_approaches_entropy() {
    let doc = json_stdout(&[
        "eval", "sigma", "--n", "7", "--ell", "1", "--q", "4", "--grid", "10:40:10", "--format",
        "json",
    ]);
    let s = series(&doc, "r");
    assert_eq!(s.len(), 4);
    assert!((s[3].1 - 4.0).abs() < 1e-12);
    assert!(s
        .windows(2)
        .all(|w| (w[1].1 - 4.0).abs() <= (w[0].1 - 4.0).abs()));
}

#[test]
fn eval_phi_real_hyperbolic() {
    let doc = json_stdout(&[
        "eval", "phi", "--n", "3", "--ell", "2", "--q", "2", "--lambda", "1", "--grid", "0:5:0.25",
        "--format", "json",
    ]);
    for (r, v) in series(&doc, "r") {
        let exact = if r == 0.0 { 1.0 } else { r.sin() / r.sinh() };
        assert!((v - exact).abs() < 1e-10, "r = {r}");
    }
}

#[test]
fn eval_errors() {
    hhm()
        .args([
            "eval", "sigma", "--n", "3", "--ell", "2", "--q", "2", "--grid", "1:0:0.5",
        ])
        .assert()
        .code(2)
        .stdout(predicate::str::is_empty());
    hhm()
        .args([
            "eval", "sigma", "--n", "3", "--ell", "2", "--q", "2", "--grid", "0:1:0.5",
        ])
        .assert()
        .code(2);
    hhm()
        .args([
            "eval", "phi", "--n", "3", "--ell", "2", "--q", "2", "--grid", "0:1:0.5",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("--lambda"));
    // w = tanh²(8) is too close to 1 for the series ceiling
    hhm()
        .args([
            "eval", "phi", "--n", "3", "--ell", "4", "--q", "3", "--lambda", "0.5", "--grid",
            "4:4:1",
        ])
        .assert()
        .code(3)
        .stderr(predicate::str::contains("did not converge"));
}

#[test]
fn csv_and_json_round_trip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("theta.csv");
    let json_path = dir.path().join("theta.json");
    let base = [
        "eval", "phi", "--n", "7", "--ell", "1", "--q", "4", "--lambda", "0.7", "--grid", "0:3:0.1",
    ];
    hhm()
        .args(base)
        .args(["--format", "csv", "--output", csv_path.to_str().unwrap()])
        .assert()
        .success()
        .stdout(predicate::str::is_empty());
    hhm()
        .args(base)
        .args(["--format", "json", "-o", json_path.to_str().unwrap()])
        .assert()
        .success();

    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["r", "value"]);
    let from_csv: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    let doc: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let from_json = series(&doc, "r");
    assert_eq!(from_csv.len(), 31);
    assert_eq!(from_csv, from_json);

    let p = hhm_core::ModelParams::new(7, 1.0, 4.0).unwrap();
    for (r, v) in from_csv {
        let direct = hhm_core::special::spherical_function(&p, 0.7, r, 1e-12).unwrap();
        assert_eq!(v.to_bits(), direct.to_bits(), "r = {r}");
    }
}

#[test]
fn dr_lower_bound_four_rows() {
    let start = std::time::Instant::now();
    let out = hhm()
        .args(["dr", "lower-bound", "--max-m", "64", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(start.elapsed().as_secs_f64() < 1.0);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<(u32, u64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows, vec![(1, 2), (2, 4), (4, 8), (8, 16)]);
    hhm()
        .args(["dr", "lower-bound", "--max-m", "7"])
        .assert()
        .code(2);
}

#[test]
fn dr_enumerate() {
    let rows: Value = json_stdout(&[
        "dr",
        "enumerate",
        "--max-m",
        "2",
        "--max-j",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(rows.as_array().unwrap().len(), 2);
    let rows: Value = json_stdout(&[
        "dr",
        "enumerate",
        "--max-m",
        "1",
        "--max-j",
        "3",
        "--format",
        "json",
    ]);
    let ks: Vec<u64> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["k"].as_u64().unwrap())
        .collect();
    assert_eq!(ks, vec![2, 4, 6]);
    assert_eq!(rows[0]["classification"], "AtLower");
}

#[test]
fn transform_symmetric_grid_gives_symmetric_output() {
    let doc = json_stdout(&[
        "transform",
        "--n",
        "4",
        "--ell",
        "1",
        "--q",
        "2",
        "--profile",
        "bump:R=2",
        "--lambdas",
        "-2:2:0.5",
        "--format",
        "json",
    ]);
    let s = series(&doc, "lambda");
    assert_eq!(s.len(), 9);
    for i in 0..s.len() {
        let j = s.len() - 1 - i;
        assert_eq!(s[i].0, -s[j].0);
        assert!((s[i].1 - s[j].1).abs() <= 2e-10);
    }
}

#[test]
fn transform_zero_profile_and_file_profile() {
    let doc = json_stdout(&[
        "transform",
        "--n",
        "3",
        "--ell",
        "2",
        "--q",
        "2",
        "--profile",
        "zero:R=3",
        "--lambdas",
        "0:2:1",
        "--format",
        "json",
    ]);
    assert!(series(&doc, "lambda").iter().all(|&(_, v)| v == 0.0));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    fs::write(&path, "r,value\n0,1\n1,0.5\n2,0\n").unwrap();
    let doc = json_stdout(&[
        "transform",
        "--n",
        "3",
        "--ell",
        "2",
        "--q",
        "2",
        "--profile",
        path.to_str().unwrap(),
        "--lambdas",
        "0:0:1",
        "--format",
        "json",
    ]);
    // ∫₀² F(r) (r/sinh r) sinh²r dr with the piecewise-linear F, times 4π
    let f = |r: f64| 1.0 - 0.5 * r;
    let n = 200_000;
    let h = 2.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let r = (i as f64 + 0.5) * h;
        sum += f(r) * r * r.sinh();
    }
    let oracle = 4.0 * std::f64::consts::PI * sum * h;
    let got = series(&doc, "lambda")[0].1;
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");

    fs::write(&path, "r,value\n1,1\n0.5,0\n").unwrap();
    hhm()
        .args([
            "transform",
            "--n",
            "3",
            "--ell",
            "2",
            "--q",
            "2",
            "--profile",
            path.to_str().unwrap(),
            "--lambdas",
            "0:1:1",
        ])
        .assert()
        .code(2);
}

#[test]
fn transform_quadrature_failure_exits_3() {
    hhm()
        .args([
            "transform",
            "--n",
            "3",
            "--ell",
            "2",
            "--q",
            "2",
            "--profile",
            "bump:R=0.5",
            "--lambdas",
            "0:0:1",
            "--tol",
            "1e-30",
        ])
        .assert()
        .code(3)
        .stderr(predicate::str::contains("subdivisions"));
}

#[test]
fn transform_ode_fallback_note_goes_to_stderr() {
    let out = hhm()
        .args([
            "transform",
            "--n",
            "3",
            "--ell",
            "4",
            "--q",
            "3",
            "--profile",
            "bump:R=4",
            "--lambdas",
            "0.5:0.5:1",
            "--tol",
            "1e-6",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["series"][0]["value"].as_f64().unwrap().is_finite());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ODE fallback"));
}

#[test]
fn verify_default_passes() {
    hhm()
        .arg("verify")
        .assert()
        .success()
        .stdout(predicate::str::contains("overall PASS"));
}

#[test]
fn verify_perturbed_fails() {
    hhm()
        .args(["verify", "--filter", "ode_vs_2f1", "--perturb"])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("failed: FAIL ode_vs_2f1"));
}

#[test]
fn verify_filter_runs_one_family() {
    let doc = json_stdout(&["verify", "--filter", "ledger", "--format", "json"]);
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    assert!(checks
        .iter()
        .all(|c| c["name"].as_str().unwrap().starts_with("ledger/")));
    assert_eq!(doc["all_passed"], true);
    hhm()
        .args(["verify", "--filter", "no-such-check"])
        .assert()
        .code(2);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(
        &path,
        r#"{"model": {"n": 3, "ell": 2.0, "q": 2.0}, "format": "json", "grid": "0.5:1:0.5"}"#,
    )
    .unwrap();
    let doc = json_stdout(&["--config", path.to_str().unwrap(), "eval", "theta"]);
    assert_eq!(series(&doc, "r").len(), 2);
    // flags override the document
    let out = hhm()
        .args([
            "--config",
            path.to_str().unwrap(),
            "eval",
            "theta",
            "--format",
            "csv",
            "--n",
            "4",
            "--ell",
            "1",
            "--q",
            "2",
        ])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("r,value"));

    fs::write(&path, r#"{"grid": "1:0:1"}"#).unwrap();
    hhm()
        .args([
            "--config",
            path.to_str().unwrap(),
            "model-info",
            "--n",
            "4",
            "--ell",
            "1",
            "--q",
            "2",
        ])
        .assert()
        .code(2);
    fs::write(&path, r#"{"colour": "blue"}"#).unwrap();
    hhm()
        .args([
            "--config",
            path.to_str().unwrap(),
            "model-info",
            "--n",
            "4",
            "--ell",
            "1",
            "--q",
            "2",
        ])
        .assert()
        .code(2);
}
