//! End-to-end tests that drive the `umzi` binary exactly as a user would:
//! argument parsing, config layering, fail-closed validation, output file
//! formats, and the run manifest.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn umzi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_umzi"))
}

fn run(args: &[&str]) -> Output {
    umzi().args(args).output().expect("failed to spawn umzi binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn first_line(path: &Path) -> String {
    read(path).lines().next().unwrap_or_default().to_string()
}

#[test]
fn validate_accepts_the_default_configuration() {
    let out = run(&["validate"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("configuration ok (seed 1)"), "stdout: {text}");
    // The effective config is echoed as JSON so runs are auditable.
    let json_start = text.find('{').expect("no JSON in validate output");
    let value: serde_json::Value =
        serde_json::from_str(&text[json_start..]).expect("validate output is not valid JSON");
    assert_eq!(value["umzi"]["coupler_ratio"], 0.5);
}

#[test]
fn unknown_set_key_fails_closed_with_a_suggestion() {
    let out = run(&["validate", "--set", "umzi.phse=1.0"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("umzi.phse"), "stderr: {err}");
    assert!(err.contains("umzi.phi_rad"), "stderr: {err}");
}

#[test]
fn unknown_file_key_fails_closed_with_a_suggestion() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"detectors": {"signal": {"efficincy": 0.5}}}"#).unwrap();
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("detectors.signal.efficincy"), "stderr: {err}");
    assert!(err.contains("detectors.signal.efficiency"), "stderr: {err}");
}

#[test]
fn every_violation_is_reported_in_one_pass() {
    let out = run(&[
        "validate",
        "--set",
        "umzi.coupler_ratio=1.2",
        "--set",
        "fig5.visibility=7",
        "--set",
        "detectors.idler.efficiency=-0.25",
    ]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("3 problems"), "stderr: {err}");
    assert!(err.contains("umzi.coupler_ratio"), "stderr: {err}");
    assert!(err.contains("fig5.visibility"), "stderr: {err}");
    assert!(err.contains("detectors.idler.efficiency"), "stderr: {err}");
}

#[test]
fn type_errors_carry_the_field_path() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"umzi": {"tau_s": "fast"}}"#).unwrap();
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("umzi.tau_s"), "stderr: {}", stderr(&out));
}

#[test]
fn flag_overrides_beat_file_values_and_file_beats_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"seed": 5, "umzi": {"phi_rad": 0.25}, "fig4": {"n_phases": 12}}"#).unwrap();
    let out = run(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--set",
        "umzi.phi_rad=0.75",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let json_start = text.find('{').unwrap();
    let value: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    // precedence: flag > file > default
    assert_eq!(value["seed"], 9);
    assert_eq!(value["umzi"]["phi_rad"], 0.75);
    assert_eq!(value["fig4"]["n_phases"], 12);
    // untouched fields keep their defaults
    assert_eq!(value["umzi"]["coupler_ratio"], 0.5);
}

#[test]
fn set_accepts_bare_words_and_json_values() {
    let out = run(&[
        "validate",
        "--set",
        "fig3.port_pair=DG",
        "--set",
        "fig3.phases_rad=[0.1,2.5]",
        "--set",
        "acquisition.chunks=3",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let json_start = text.find('{').unwrap();
    let value: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(value["fig3"]["port_pair"], "DG");
    assert_eq!(value["fig3"]["phases_rad"][1], 2.5);
    assert_eq!(value["acquisition"]["chunks"], 3);
}

#[test]
fn malformed_set_expression_is_rejected() {
    let out = run(&["validate", "--set", "umzi.phi_rad"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("umzi.phi_rad"), "stderr: {}", stderr(&out));
}

/// Cheap source settings so scenario tests stay fast: fewer pairs, but
/// high enough detection efficiency that every fit stays well-fed.
const FAST: &[&str] = &[
    "--set",
    "source.pair_rate_hz=2e5",
    "--set",
    "source.accidental_singles_rate_hz=2e4",
    "--set",
    "detectors.signal.efficiency=0.9",
    "--set",
    "detectors.idler.efficiency=0.9",
    "--set",
    "umzi.insertion_loss_db=0",
];

#[test]
fn simulate_writes_histogram_csv_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("run");
    let out = umzi()
        .args(["simulate", "--seed", "11", "--out", out_dir.to_str().unwrap()])
        .args(FAST)
        .args(["--set", "simulate.duration_s=0.5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let csv = out_dir.join("simulate_histogram.csv");
    assert_eq!(first_line(&csv), "delta_t_ps,counts");

    let manifest: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["scenario"], "simulate");
    assert_eq!(manifest["seed"], 11);
    let hash = manifest["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert!(manifest["versions"]["umzi_core"].is_string());
    assert!(manifest["versions"]["umzi_cli"].is_string());
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(outputs.contains(&"simulate_histogram.csv"), "outputs: {outputs:?}");
    assert!(outputs.contains(&"simulate_report.json"), "outputs: {outputs:?}");
}

#[test]
fn sweep_writes_fringe_csv_with_exact_header() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("run");
    let out = umzi()
        .args(["sweep", "--seed", "3", "--out", out_dir.to_str().unwrap()])
        .args(FAST)
        .args(["--set", "sweep.n_phases=6", "--set", "sweep.duration_per_point_s=0.2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let csv = out_dir.join("sweep_scan.csv");
    let text = read(&csv);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "phi_rad,coincidences,singles_s,singles_i");
    assert_eq!(lines.count(), 6);
}

#[test]
fn fig5_writes_beating_csv_with_exact_header_and_prediction_column() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("run");
    let out = umzi()
        .args(["fig5", "--seed", "4", "--out", out_dir.to_str().unwrap()])
        .args(["--set", "fig5.n_delays=16"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let text = read(&out_dir.join("fig5_scan.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "delta_tau_ps,counts,prediction");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    // delays span [0, 5 ps]; the prediction column is expected counts and
    // dips toward zero at Δτ = 0 where the antibunched pattern is darkest
    let first: Vec<&str> = rows[0].split(',').collect();
    let last: Vec<&str> = rows[rows.len() - 1].split(',').collect();
    assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
    assert!((last[0].parse::<f64>().unwrap() - 5.0).abs() < 1e-9);
    let predictions: Vec<f64> = rows
        .iter()
        .map(|row| row.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(predictions.iter().all(|p| p.is_finite() && *p >= 0.0));
    let max = predictions.iter().cloned().fold(0.0, f64::max);
    assert!(predictions[0] < 0.05 * max, "no dip at zero delay: {predictions:?}");
}

#[test]
fn fig3_emits_one_histogram_per_phase_and_a_report() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("run");
    let out = umzi()
        .args(["fig3", "--seed", "8", "--out", out_dir.to_str().unwrap()])
        .args(FAST)
        .args(["--set", "fig3.duration_s=1.0"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let histograms: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| n.starts_with("fig3_histogram_phi") && n.ends_with(".csv"))
        .collect();
    assert_eq!(histograms.len(), 2, "found: {histograms:?}");
    for name in &histograms {
        assert_eq!(first_line(&out_dir.join(name)), "delta_t_ps,counts");
    }

    let report: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("fig3_report.json"))).unwrap();
    assert_eq!(report["peaks"].as_array().unwrap().len(), 3);
    assert!(report["car"].is_object(), "report: {report}");
    assert!(report["suppression"].is_object(), "report: {report}");
}

#[test]
fn scenario_aborts_cleanly_on_invalid_config() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("run");
    let out = umzi()
        .args(["fig4", "--out", out_dir.to_str().unwrap()])
        .args(["--set", "fig4.n_phases=2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("fig4.n_phases"), "stderr: {}", stderr(&out));
    // fail-closed: nothing is written for a rejected configuration
    assert!(!out_dir.join("manifest.json").exists());
}
