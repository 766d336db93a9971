//! End-to-end tests of the binary: output layout, guard rails, exit codes,
//! and the determinism contract (same seed -> byte-identical data files,
//! independent of worker count).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fbcov")
}

fn default_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn fbcov")
}

fn run_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(bin())
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .expect("spawn fbcov")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_column(path: &Path, index: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(index).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn coverage_writes_all_curves_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "coverage",
        "--config",
        default_config_path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--grid",
        "25:300:25",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    for name in [
        "coverage_forward_closed.csv",
        "coverage_feedback_exact.csv",
        "coverage_feedback_gl.csv",
        "coverage_feedback_closed.csv",
        "coverage.json",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    // every output listed in the manifest exists
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    for entry in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(entry.as_str().unwrap()).exists());
    }
    assert!(manifest["config_hash"].as_str().unwrap().len() == 64);
    // forward never beats feedback under the shipped defaults
    let forward = csv_column(&dir.path().join("coverage_forward_closed.csv"), 1);
    let feedback = csv_column(&dir.path().join("coverage_feedback_exact.csv"), 1);
    for (f, b) in forward.iter().zip(&feedback) {
        assert!(b >= f, "feedback {b} below forward {f}");
    }
}

#[test]
fn coverage_reruns_are_byte_identical() {
    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&[
            "coverage",
            "--config",
            default_config_path().to_str().unwrap(),
            "--output",
            dir.path().to_str().unwrap(),
            "--method",
            "feedback-exact",
            "--grid",
            "50:200:50",
        ]);
        assert!(out.status.success());
        fs::read(dir.path().join("coverage_feedback_exact.csv")).unwrap()
    };
    assert_eq!(run_once(), run_once());
}

#[test]
fn coverage_rejects_distances_below_the_clamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "coverage",
        "--config",
        default_config_path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--grid",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("far-field"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn aps_ratio_and_density_linearity() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "aps",
        "--config",
        default_config_path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--mode",
        "both",
        "--grid",
        "50:250:50",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let ratio = csv_column(&dir.path().join("aps.csv"), 3);
    for r in ratio {
        assert!(r >= 1.0, "ratio {r} below 1");
    }

    // doubling the density exactly doubles both counts
    let doubled = tempfile::tempdir().unwrap();
    let cfg_text = fs::read_to_string(default_config_path())
        .unwrap()
        .replace("\"ap_density_per_m2\": 6e-3", "\"ap_density_per_m2\": 12e-3");
    let cfg_path = doubled.path().join("doubled.json");
    fs::write(&cfg_path, cfg_text).unwrap();
    let out = run(&[
        "aps",
        "--config",
        cfg_path.to_str().unwrap(),
        "--output",
        doubled.path().to_str().unwrap(),
        "--mode",
        "both",
        "--grid",
        "50:250:50",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    for col in [1, 2] {
        let base = csv_column(&dir.path().join("aps.csv"), col);
        let twice = csv_column(&doubled.path().join("aps.csv"), col);
        for (b, t) in base.iter().zip(&twice) {
            assert_eq!(*t, 2.0 * b, "column {col}");
        }
    }
}

#[test]
fn aps_rejects_descending_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "aps",
        "--config",
        default_config_path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--grid",
        "250:50:50",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("ascend"));
}

#[test]
fn validate_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "validate",
        "--config",
        default_config_path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--grid",
        "50:150:50",
        "--trials",
        "20000",
        "--realizations",
        "300",
        "--seed",
        "11",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"), "stdout: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate.json")).unwrap())
            .unwrap();
    assert_eq!(report["summary"]["passed"], serde_json::json!(true));
    assert_eq!(report["points"].as_array().unwrap().len(), 6);
}

#[test]
fn validate_is_deterministic_across_runs_and_worker_counts() {
    let run_to_bytes = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = run_with_threads(
            &[
                "validate",
                "--config",
                default_config_path().to_str().unwrap(),
                "--output",
                dir.path().to_str().unwrap(),
                "--grid",
                "100:200:100",
                "--trials",
                "5000",
                "--realizations",
                "100",
                "--seed",
                "99",
            ],
            threads,
        );
        assert!(out.status.success(), "{}", stderr_of(&out));
        fs::read(dir.path().join("validate_forward.csv")).unwrap()
    };
    let single = run_to_bytes("1");
    assert_eq!(single, run_to_bytes("1"));
    assert_eq!(single, run_to_bytes("4"));
}

#[test]
fn validate_budget_warning_escalates_under_strict() {
    let args_base = |dir: &Path, strict: bool| {
        let mut v = vec![
            "validate".to_string(),
            "--config".into(),
            default_config_path().to_str().unwrap().into(),
            "--output".into(),
            dir.to_str().unwrap().into(),
            "--grid".into(),
            "250".into(),
            "--trials".into(),
            "100".into(),
            "--realizations".into(),
            "50".into(),
        ];
        if strict {
            v.push("--strict".into());
        }
        v
    };
    // a 5e-8 coverage point cannot be resolved with 100 trials: warn
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin())
        .args(args_base(dir.path(), false))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("warning"), "{}", stderr_of(&out));

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin())
        .args(args_base(dir.path(), true))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn sensitivity_single_cell_reports_insufficient_axes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sensitivity",
        "--config",
        default_config_path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--a-grid",
        "4",
        "--d-grid",
        "150",
        "--pu-mw",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sensitivity.json")).unwrap())
            .unwrap();
    for v in report["verdicts"].as_array().unwrap() {
        assert_eq!(v["status"], serde_json::json!("insufficient_axis"));
    }
    let grid = fs::read_to_string(dir.path().join("mf_error_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2); // header + one cell
}

#[test]
fn sensitivity_flags_precondition_violations() {
    // valid config (a_ratio = 1) whose slope turns negative within the sweep
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = fs::read_to_string(default_config_path())
        .unwrap()
        .replace(
            "\"u\": [0.9, 15.0, 0.03, 4.0, 3.0, -0.8]",
            "\"u\": [0.9, 15.0, -0.25, 4.0, 3.0, -0.8]",
        )
        .replace("\"a_ratio\": 4", "\"a_ratio\": 1");
    let cfg_path = dir.path().join("violating.json");
    fs::write(&cfg_path, cfg_text).unwrap();
    let out = run(&[
        "sensitivity",
        "--config",
        cfg_path.to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--a-grid",
        "1:8:1",
        "--d-grid",
        "100:200:100",
        "--pu-mw",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sensitivity.json")).unwrap())
            .unwrap();
    for v in report["verdicts"].as_array().unwrap() {
        assert_eq!(
            v["status"],
            serde_json::json!("precondition_violated"),
            "claim {}",
            v["claim"]
        );
    }
}

#[test]
fn unknown_config_keys_fail_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = fs::read_to_string(default_config_path())
        .unwrap()
        .replace("\"ap_density_per_m2\"", "\"ap_densty_per_m2\"");
    let cfg_path = dir.path().join("typo.json");
    fs::write(&cfg_path, cfg_text).unwrap();
    let out = run(&[
        "coverage",
        "--config",
        cfg_path.to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("unknown field"), "{}", stderr_of(&out));
}
