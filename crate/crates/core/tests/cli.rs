use std::path::Path;
use std::process::{Command, Output};

use cdeim::io::{read_matrix, read_sensors, write_matrix, write_vector};
use nalgebra::{DMatrix, DVector};

fn cdeim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdeim"))
        .current_dir(dir)
        .env_remove("CDEIM_OUTPUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn bump(n: usize, centre: f64, width: f64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        let x = i as f64 / (n - 1) as f64;
        (-((x - centre) / width).powi(2)).exp()
    })
}

fn manifest(dir: &Path) -> toml::Table {
    std::fs::read_to_string(dir.join("manifest.toml")).unwrap().parse().unwrap()
}

#[test]
fn pod_sensors_reconstruct_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let n = 200;
    let cols: Vec<DVector<f64>> = (0..60).map(|k| bump(n, 0.1 + 0.8 * k as f64 / 59.0, 0.06)).collect();
    write_matrix(&DMatrix::from_columns(&cols), d.join("snaps.cdmx")).unwrap();
    write_vector(&bump(n, 0.47, 0.06), d.join("y_field.csv")).unwrap();

    let out = cdeim(d, &["pod", "--snapshots", "snaps.cdmx", "--modes", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let phi = read_matrix(d.join("phi.cdmx")).unwrap();
    assert_eq!(phi.shape(), (n, 10));
    assert!(d.join("singular_values.csv").exists());

    let out = cdeim(d, &["sensors", "--phi", "phi.cdmx", "--r", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sensors = read_sensors(d.join("sensors.txt")).unwrap();
    assert_eq!(sensors.len(), 10);

    let truth = bump(n, 0.47, 0.06);
    let y = DVector::from_iterator(10, sensors.iter().map(|&i| truth[i]));
    write_vector(&y, d.join("y.csv")).unwrap();
    let out = cdeim(
        d,
        &["reconstruct", "--phi", "phi.cdmx", "--sensors", "sensors.txt", "--y", "y.csv", "--bounds", "0", "1"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let outcome: toml::Table = std::fs::read_to_string(d.join("outcome.toml")).unwrap().parse().unwrap();
    let get = |k: &str| outcome[k].as_float().unwrap();
    assert!(get("max_violation") <= (6.0f64 * 1e-7).cbrt());
    assert!(get("obs_residual") <= get("residual_bound") * (1.0 + 1e-8) + 1e-10 * y.norm());
    let rec = read_matrix(d.join("reconstruction.cdmx")).unwrap();
    assert_eq!(rec.shape(), (n, 1));
    assert_eq!(manifest(d)["command"].as_str(), Some("reconstruct"));
}

#[test]
fn harmonics_writes_one_row_per_r_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdeim(
        dir.path(),
        &["harmonics", "--r", "4,6", "--n-functions", "50", "--n-train", "40", "--grid-points", "120"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("harmonics_summary.csv")).unwrap();
    let keys: Vec<(String, String)> = summary
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    assert_eq!(keys.len(), 4);
    for r in ["4", "6"] {
        for m in ["deim", "cdeim"] {
            assert!(keys.contains(&(r.into(), m.into())), "missing ({r}, {m})");
        }
    }
    let cases = std::fs::read_to_string(dir.path().join("harmonics_cases.csv")).unwrap();
    assert_eq!(cases.lines().count(), 1 + 2 * 2 * 10);
}

#[test]
fn error_categories_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cdeim(dir.path(), &["pod", "--snapshots", "nope.cdmx", "--modes", "3"]);
    assert_eq!(missing.status.code(), Some(7));
    assert!(!missing.stderr.is_empty());

    std::fs::write(dir.path().join("bad.cdmx"), b"XXXX\x01\x00").unwrap();
    let bad = cdeim(dir.path(), &["pod", "--snapshots", "bad.cdmx", "--modes", "3"]);
    assert_eq!(bad.status.code(), Some(8));

    let invalid = cdeim(dir.path(), &["harmonics", "--eta", "9"]);
    assert_eq!(invalid.status.code(), Some(3));

    let usage = cdeim(dir.path(), &["pod", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn flags_override_config_file_and_file_overrides_env() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("from_env")).unwrap();
    std::fs::write(
        d.join("run.toml"),
        "seed = 9\noutput_dir = \"from_file\"\n[harmonics]\nn_functions = 50\nn_train = 40\ngrid_points = 120\n",
    )
    .unwrap();
    std::fs::create_dir(d.join("from_file")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cdeim"))
        .current_dir(d)
        .env("CDEIM_OUTPUT_DIR", d.join("from_env"))
        .args(["--config", "run.toml", "harmonics", "--r", "4", "--n-train", "35"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!d.join("from_env/manifest.toml").exists());
    let m = manifest(&d.join("from_file"));
    let h = m["parameters"]["harmonics"].as_table().unwrap();
    assert_eq!(h["n_train"].as_integer(), Some(35));
    assert_eq!(h["n_functions"].as_integer(), Some(50));
    assert_eq!(h["seed"].as_integer(), Some(9));
}

#[test]
fn env_sets_output_dir_when_nothing_else_does() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("env_out");
    std::fs::create_dir(&target).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cdeim"))
        .current_dir(dir.path())
        .env("CDEIM_OUTPUT_DIR", &target)
        .args(["harmonics", "--r", "4", "--n-functions", "50", "--n-train", "40", "--grid-points", "120"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("harmonics_summary.csv").exists());
    assert!(target.join("manifest.toml").exists());
    assert!(!dir.path().join("harmonics_summary.csv").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "[harmonics]\nn_funcs = 10\n").unwrap();
    let out = cdeim(dir.path(), &["--config", "run.toml", "harmonics", "--r", "4"]);
    assert_eq!(out.status.code(), Some(3));
}
