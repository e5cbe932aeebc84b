use std::path::Path;

use serde_json::Value;

use boltzlp::estimates::BoundId;
use boltzlp::harness::{parse_config, run_constants, run_simulate, run_verify, EXIT_ERROR, EXIT_OK, SERIES_HEADER};

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn series(dir: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(dir.join("series.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SERIES_HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn collisionless_run_keeps_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(r#"{"seed": 4, "collisions": false, "grid": {"nx": 6, "nv": 6}, "integrator": {"t_max": 0.5}}"#, "t").unwrap();
    let out = run_simulate(&cfg, dir.path()).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    let rows = series(dir.path());
    assert!(!rows.is_empty() && rows.len() % 4 == 0);
    for r in &rows {
        assert!((r[3].parse::<f64>().unwrap() - 1.0).abs() <= 1e-12, "{r:?}");
    }
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["seed"], 4);
    let defaults: Vec<&str> = m["defaults_applied"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(defaults.contains(&"kernel.gamma") && defaults.contains(&"grid.truncation_tol"));
    assert!(!defaults.contains(&"seed") && !defaults.contains(&"grid.nx"));
    assert!(m["derived"]["dt"].as_f64().unwrap() > 0.0);
}

#[test]
fn maxwellian_run_is_nearly_flat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        r#"{"initial": {"kind": "maxwellian", "amplitude": 0.8}, "grid": {"nx": 2, "nv": 10},
            "quadrature": {"velocity": {"kind": "gauss_hermite", "order": 4}, "sphere": {"n_theta": 4, "n_phi": 8}},
            "integrator": {"t_max": 0.2}}"#,
        "t",
    )
    .unwrap();
    run_simulate(&cfg, dir.path()).unwrap();
    for r in series(dir.path()) {
        let ratio: f64 = r[3].parse().unwrap();
        // the p = 1/2 norm is dominated by the truncated tails
        let tol = if r[1] == "0.5" { 5e-2 } else { 1e-2 };
        assert!((ratio - 1.0).abs() <= tol, "{r:?}");
        assert!(ratio <= r[4].parse::<f64>().unwrap_or(f64::INFINITY));
    }
}

#[test]
fn failed_run_keeps_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // a step far above the stability limit
    let cfg = parse_config(r#"{"grid": {"nx": 4, "nv": 6}, "integrator": {"dt": 10.0, "t_max": 20.0}}"#, "t").unwrap();
    let out = run_simulate(&cfg, dir.path()).unwrap();
    assert_eq!(out.exit_code, EXIT_ERROR);
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("dt"));
}

#[test]
fn verify_records_are_sorted_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(
        r#"{"seed": 2, "kernel": {"gamma": -0.5}, "grid": {"nx": 4, "nv": 6}, "integrator": {"t_max": 0.2},
            "verify": {"ray_samples": 50, "decay_points": 2, "decay_times": [0, 5], "mc_samples": 4000, "n1_fields": 1}}"#,
        "t",
    )
    .unwrap();
    cfg.override_bounds(vec![BoundId::N1, BoundId::Decay, BoundId::Ray]).unwrap();
    let out = run_verify(&cfg, dir.path()).unwrap();
    let records = read_json(&dir.path().join("records.json"));
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 50 + 4 + 1);
    let keys: Vec<(usize, u64)> = records
        .iter()
        .map(|r| (BoundId::ALL.iter().position(|b| b.as_str() == r["bound"]).unwrap(), r["index"].as_u64().unwrap()))
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
    let pass = records.iter().filter(|r| r["status"] == "pass").count();
    assert!(out.summary.contains(&format!("{pass} pass")), "{}", out.summary);
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["summary"].as_str().unwrap(), out.summary);
    assert_eq!(m["exit_code"].as_i64().unwrap(), out.exit_code as i64);
}

#[test]
fn hard_kernel_marks_soft_only_bounds_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(r#"{"kernel": {"gamma": 0.5}, "grid": {"nx": 4, "nv": 6}, "verify": {"decay_points": 1, "decay_times": [1], "n1_fields": 1}}"#, "t").unwrap();
    cfg.override_bounds(vec![BoundId::Decay, BoundId::N1]).unwrap();
    let out = run_verify(&cfg, dir.path()).unwrap();
    let records = read_json(&dir.path().join("records.json"));
    for r in records.as_array().unwrap() {
        assert_eq!(r["status"], "unavailable", "{r}");
        assert!(r["note"].as_str().unwrap().contains("gamma"));
    }
    assert_eq!(out.exit_code, EXIT_OK);
}

#[test]
fn constants_rows_and_unavailable_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        r#"{"maxwellian": {"a_m": 1.0, "a_M": 1.0}, "constants": {"gamma": [-2.5, 0.5], "mu": [0.5], "p": [2], "alpha": [3.141592653589793], "beta": [3.141592653589793]}}"#,
        "t",
    )
    .unwrap();
    run_constants(&cfg, dir.path()).unwrap();
    let t = read_json(&dir.path().join("constants.json"));
    let rows = t["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let soft = &rows[0];
    assert!(soft["C_N2A"].is_null());
    assert!(soft["unavailable"].as_array().unwrap().iter().any(|s| s.as_str().unwrap().contains("gamma > -2")));
    let hard = &rows[1];
    assert!(hard["unavailable"].as_array().unwrap().iter().any(|s| s.as_str().unwrap().contains("(-2, 0]")));
    // a_m = a_M = 1 and mu = 1/2: D reduces to C_N1 B
    assert_eq!(hard["D_mu_p"].as_f64().unwrap(), hard["C_N1"].as_f64().unwrap());
    let g_inf = t["g_infinity"].as_array().unwrap();
    assert!(g_inf.iter().all(|r| r["unavailable"].is_string()));
}

#[test]
fn g_infinity_is_reported_for_soft_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(r#"{"constants": {"gamma": [-1.0], "mu": [0.5], "p": [2]}}"#, "t").unwrap();
    run_constants(&cfg, dir.path()).unwrap();
    let t = read_json(&dir.path().join("constants.json"));
    let g = &t["g_infinity"][0]["value"];
    let (d, res) = (g["d_limit"].as_f64().unwrap(), g["residual"].as_f64().unwrap());
    assert!(d.is_finite() && res >= 0.0);
    assert_eq!(g["samples"].as_array().unwrap().len(), 3);
}
