//! The command-line interface end to end.

use std::path::Path;
use std::process::{Command, Output};

use socrom::config::ExperimentConfig;
use socrom::report::{read_samples, ErrorReport};

fn socrom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_socrom"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = socrom(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_prints_a_loadable_preset() {
    let text = ok(&["config", "smoke"]);
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), ExperimentConfig::smoke());
    let out = socrom(&["config", "nonsense"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}

#[test]
fn run_then_refit_from_text_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let summary = ok(&["run", "--preset", "smoke", "--out", s(&run)]);
    assert!(summary.contains("smoke"));
    let report = ok(&["report", s(&run)]);
    assert_eq!(report.lines().count(), 4);

    let refit = dir.path().join("refit");
    ok(&[
        "fit",
        "--matrices",
        s(&run.join("initial_matrices.txt")),
        "--data",
        s(&run.join("training_data.csv")),
        "--out",
        s(&refit),
        "--maxit",
        "5",
    ]);
    let history = std::fs::read_to_string(refit.join("fit_history.csv")).unwrap();
    let objectives: Vec<f64> = history
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(objectives.len() >= 2 && objectives.len() <= 6);
    assert!(objectives.windows(2).all(|w| w[1] <= w[0]));
    let errors = ErrorReport::read_csv(&refit.join("errors_train.csv")).unwrap();
    assert_eq!(errors.rows.len(), 5);
}

#[test]
fn sweep_and_pod_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    ok(&["fom-sweep", "--preset", "smoke", "--out", s(&sweep)]);
    let pairs = read_samples(&sweep).unwrap();
    assert_eq!(pairs.len(), 5);
    assert_eq!((pairs[0].0, pairs[4].0), (1.0, 10.0));

    let pod = dir.path().join("pod");
    ok(&["pod", "--preset", "smoke", "--out", s(&pod)]);
    let control = std::fs::read_to_string(pod.join("control_singular_values.csv")).unwrap();
    assert_eq!(control.lines().count(), 1 + 5);
    let state = std::fs::read_to_string(pod.join("state_singular_values.csv")).unwrap();
    assert_eq!(state.lines().count(), 1 + 10);
}

#[test]
fn multiscale_basis_needs_a_coarse_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = socrom(&["gmsfem-basis", "--preset", "smoke", "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no coarse grid"));

    let mut cfg = ExperimentConfig::smoke();
    cfg.fine = [16, 16];
    cfg.coarse = Some(socrom::config::CoarseConfig {
        grid: [4, 4],
        modes: 2,
        kappa_mu: None,
    });
    let path = dir.path().join("ms.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let msg = ok(&["gmsfem-basis", "--config", s(&path), "--out", s(dir.path())]);
    assert!(msg.starts_with("50 basis functions on 25 coarse nodes"), "{msg}");
    let table = std::fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 50);
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"fine": [8, 8], "unknown_key": 1}"#).unwrap();
    let out = socrom(&["run", "--config", s(&path), "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = socrom(&["run", "--out", s(dir.path())]);
    assert!(!out.status.success());
}
