use std::path::Path;
use std::process::{Command, Output};

fn gibbs(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbs"))
        .args(args)
        .env("GIBBS_CACHE_DIR", cache)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn spectrum_then_sample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("basis.bin");
    let csv = dir.path().join("ev.csv");
    let out = gibbs(
        &["spectrum", "--s", "8", "--modes", "6", "--grid", "256", "--out", basis.to_str().unwrap(), "--csv", csv.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(basis.exists());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 7);

    let batch = dir.path().join("batch.csv");
    let out = gibbs(
        &[
            "sample", "--basis", basis.to_str().unwrap(), "--measure", "sphere", "--m", "1", "--n", "200", "--seed", "3",
            "--out", batch.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    let masses: f64 = summary["mode_masses"].as_array().unwrap().iter().map(|m| m["estimate"].as_f64().unwrap()).sum();
    assert!((masses - 1.0).abs() < 1e-9, "{summary}");
    assert_eq!(std::fs::read_to_string(&batch).unwrap().lines().count(), 201);
}

#[test]
fn box_spectrum_accepts_inf() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("box.bin");
    let out = gibbs(&["spectrum", "--s", "inf", "--modes", "3", "--grid", "512", "--out", basis.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cannon_prints_a_matching() {
    let dir = tempfile::tempdir().unwrap();
    let out = gibbs(&["cannon", "--g-vector", "1,2,2"], dir.path());
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["N"], 2);
    assert!(!v["pairs"].as_array().unwrap().is_empty());
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gibbs(&["cannon", "--g-vector", "1,1"], dir.path()).status.code(), Some(2));
    let missing = dir.path().join("missing.bin");
    let out = gibbs(&["relax", "--basis", missing.to_str().unwrap(), "--m", "1", "--T", "4", "--eps", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_writes_reports_and_reports_status() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports");
    let out = gibbs(&["verify", "--suite", "E7", "--out", reports.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(reports.join("E7.json").exists());
    assert!(reports.join("E7.txt").exists());

    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[E7]\nshift_temperatures = [4.0, 1.0]\n").unwrap();
    let out = gibbs(&["verify", "--suite", "E7", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
