//! End-to-end tests that drive the compiled binary the way a user would,
//! plus in-process runs where exact output bytes are easier to assert.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use upin_cli::{commands, config, svg};
use upin_core::decay;
use upin_core::pricing::bs;
use upin_core::{BoundConstants, DecayReport, DecayRow};

const BASE: &str = r#"
[model]
kind = "constant"
sigma0 = 0.2

[contract]
spot = 10.0
strike = 9.5
barrier = 11.0
maturity = 0.5

[run]
seed = 11
paths = 20000
steps = 100

[scan]
maturities = [0.5, 0.25, 0.1]

[bounds]
calibration_paths = 5000
grr_paths = 2000
"#;

fn upin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_upin")).args(args).output().expect("spawn upin")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn price_row(rows: &[Vec<String>], name: &str) -> (f64, f64) {
    let row = rows.iter().find(|r| r[0] == name).unwrap_or_else(|| panic!("row {name}"));
    (row[1].parse().unwrap(), row[2].parse().unwrap())
}

#[test]
fn price_matches_closed_forms_and_reruns_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out_a = dir.path().join("a");

    let run = upin(&["price", "--config", cfg.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert!(run.status.success(), "stderr: {}", String::from_utf8_lossy(&run.stderr));

    let table = fs::read_to_string(out_a.join("report.csv")).unwrap();
    assert!(table.starts_with("# price report; run digest sha256:"));

    let rows = data_rows(&out_a.join("report.csv"));
    let (eu, eu_se) = price_row(&rows, "european");
    let (ui, ui_se) = price_row(&rows, "up_and_in");
    let (hit, hit_se) = price_row(&rows, "hit_prob");
    assert!((eu - bs::call(10.0, 9.5, 0.2, 0.5)).abs() <= 3.0 * eu_se);
    assert!((ui - bs::up_and_in_call(10.0, 9.5, 11.0, 0.2, 0.5)).abs() <= 3.0 * ui_se);
    let tail = bs::sup_tail_probability((11f64 / 10f64).ln(), 0.2, 0.5);
    assert!((hit - tail).abs() <= 3.0 * hit_se);

    // The manifest stands in for the config; worker count must not matter.
    let manifest = out_a.join("manifest.json");
    let out_b = dir.path().join("b");
    let rerun = upin(&[
        "price",
        "--config",
        manifest.to_str().unwrap(),
        "--workers",
        "2",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert!(rerun.status.success());
    assert_eq!(
        fs::read(out_a.join("report.csv")).unwrap(),
        fs::read(out_b.join("report.csv")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    let run = upin(&[
        "price",
        "--config",
        cfg.to_str().unwrap(),
        "--paths",
        "5000",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "price");
    assert_eq!(manifest["config"]["run"]["paths"], 5000);
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn scan_rerun_from_manifest_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE
        .replace("paths = 20000", "paths = 2000")
        .replace("steps = 100", "steps = 32")
        .replace("calibration_paths = 5000", "calibration_paths = 1000");
    let cfg = write_config(dir.path(), &text);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let first = upin(&["scan", "--config", cfg.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert!(first.status.success(), "stderr: {}", String::from_utf8_lossy(&first.stderr));

    let second = upin(&[
        "scan",
        "--config",
        out_a.join("manifest.json").to_str().unwrap(),
        "--workers",
        "3",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert!(second.status.success(), "stderr: {}", String::from_utf8_lossy(&second.stderr));

    for name in ["report.csv", "prices.svg", "rate.svg"] {
        assert_eq!(
            fs::read(out_a.join(name)).unwrap(),
            fs::read(out_b.join(name)).unwrap(),
            "{name} differs between worker counts"
        );
    }

    // Every output carries the digest recorded in the manifest.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("manifest.json")).unwrap()).unwrap();
    let digest = manifest["digest"].as_str().unwrap();
    for name in ["report.csv", "prices.svg", "rate.svg"] {
        let body = fs::read_to_string(out_a.join(name)).unwrap();
        assert!(body.contains(digest), "{name} missing digest");
    }
}

#[test]
fn barrier_below_spot_is_rejected_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("barrier = 11.0", "barrier = 9.0"));
    let run = upin(&["price", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("barrier") && err.contains("spot"), "stderr: {err}");
}

#[test]
fn rho_on_the_boundary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("sigma0 = 0.2", "sigma0 = 0.2\nrho = 1.0"));
    let run = upin(&["price", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("rho"));
}

#[test]
fn empty_maturity_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("maturities = [0.5, 0.25, 0.1]", "maturities = []"));
    let run = upin(&["scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("maturity"));
}

#[test]
fn synthetic_scan_renders_injected_rates_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{BASE}\n[synthetic]\n\
         maturities = [0.5, 0.25, 0.125, 0.0625]\n\
         hit_probs = [0.5, 0.25, 0.0625, 0.00390625]\n\
         european = [0.6, 0.55, 0.52, 0.51]\n\
         up_in = [0.3, 0.15, 0.05, 0.01]\n"
    );
    let path = write_config(dir.path(), &text);
    let cfg = config::load(&path).unwrap();
    cfg.validate().unwrap();
    let out = dir.path().join("out");
    commands::scan(&cfg, &out).unwrap();

    let rows = data_rows(&out.join("report.csv"));
    assert_eq!(rows.len(), 4);
    let x0 = 10f64.ln();
    let expected: Vec<String> =
        ["0.5", "0.5", "0", "0", "0.3", "0", "0.6", "0", &x0.to_string(), "1", "1", "1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    assert_eq!(rows[0], expected);
    assert_eq!(rows[3][0], "0.0625");
    assert_eq!(rows[3][1], "0.00390625");

    // The chart legend must quote the fit of exactly the injected points.
    let maturities = [0.5, 0.25, 0.125, 0.0625];
    let hit_probs = [0.5, 0.25, 0.0625, 0.00390625];
    let report = DecayReport {
        spot: 10.0,
        strike: 9.5,
        barrier: 11.0,
        x0,
        log_barrier: 11f64.ln(),
        n_paths: 0,
        n_steps: 100,
        seed: 11,
        constants: BoundConstants {
            c1: 1.0,
            c2: 0.04,
            c3: 0.04,
            grr: None,
            vol_lower: Some(0.2),
            vol_upper: Some(0.2),
            rho: 0.0,
        },
        rows: maturities
            .iter()
            .zip(hit_probs)
            .map(|(&t, p)| DecayRow {
                maturity: t,
                hit_prob: p,
                hit_prob_se: 0.0,
                grid_hits: 0,
                up_in: 0.0,
                up_in_se: 0.0,
                european: 0.0,
                european_se: 0.0,
                mean_max: x0,
                concentration_bound: 1.0,
                cdf_bound: 1.0,
                combined_bound: 1.0,
            })
            .collect(),
    };
    let fit = decay::fit_gaussian_rate(&report, x0, 11f64.ln()).unwrap();
    let rate_svg = fs::read_to_string(out.join("rate.svg")).unwrap();
    assert!(rate_svg.contains(&svg::rate_fit_label(&fit)));
    assert_eq!(rate_svg.matches("<circle").count(), 4);
}

#[test]
fn broken_density_amplitude_fails_dominance_with_named_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BASE}c1 = 0.0\n"));
    let out = dir.path().join("out");
    let run = upin(&["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("check bound_dominance: fail"), "stdout: {stdout}");
    assert!(stdout.contains("row 0"), "stdout: {stdout}");
    assert!(String::from_utf8_lossy(&run.stderr).contains("validation suite failed"));
    assert!(fs::read_to_string(out.join("report.csv")).unwrap().contains("bound_dominance,fail"));
}

#[test]
fn validate_passes_on_constant_vol_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    let run = upin(&["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "stdout: {}", String::from_utf8_lossy(&run.stdout));
    assert!(String::from_utf8_lossy(&run.stdout).contains("7 of 7 checks passed"));
}
