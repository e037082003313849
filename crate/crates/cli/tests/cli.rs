use std::fs;
use std::path::Path;
use std::process::Command;

use phonon_cli::config::InputKind;
use phonon_cli::output::sha256_hex;
use phonon_cli::{parse_config_str, run, CliError, Experiment, ExperimentConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phonon"))
}

#[test]
fn every_experiment_runs_on_the_default_config() {
    let dir = tempfile::tempdir().unwrap();
    for experiment in Experiment::ALL {
        let cfg = ExperimentConfig {
            experiment,
            ..Default::default()
        };
        let report = run(&cfg, dir.path()).unwrap_or_else(|e| panic!("{}: {e}", experiment.name()));
        assert_eq!(report.experiment, experiment.name());
        assert!(report.first_non_finite().is_none());
        assert!(!report.artifacts.is_empty());
        for path in &report.artifacts {
            assert!(path.exists(), "{} missing", path.display());
        }
        let root = dir.path().join(experiment.name()).join("seed-0");
        assert!(root.join("manifest.json").exists());
        assert!(root.join("report.txt").exists());
    }
}

#[test]
fn manifest_checksums_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        experiment: Experiment::Tomography,
        label: Some("check".into()),
        ..Default::default()
    };
    run(&cfg, dir.path()).unwrap();
    let root = dir.path().join("tomography/check");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(root.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"], sha256_hex(cfg.to_toml().as_bytes()));
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(artifacts.len() >= 5);
    for a in artifacts {
        let bytes = fs::read(root.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
}

#[test]
fn ideal_additions_on_coherent_input_follow_the_analytic_fano_sequence() {
    let lambda: f64 = 0.6561;
    let mut cfg = ExperimentConfig {
        experiment: Experiment::Add,
        exact: true,
        ..Default::default()
    };
    cfg.input.alpha = [lambda.sqrt(), 0.0];
    cfg.sequence.repeat = 3;
    cfg.sequence.analyze = false;
    let dir = tempfile::tempdir().unwrap();
    let report = run(&cfg, dir.path()).unwrap();
    for k in 1..=3 {
        let row = report.row(&format!("add{k}")).unwrap();
        assert!((row.fano.unwrap() - lambda / (lambda + k as f64)).abs() < 1e-9);
        assert!((row.fidelity.unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn subtraction_of_vacuum_is_a_post_selection_failure() {
    let mut cfg = ExperimentConfig {
        experiment: Experiment::Subtract,
        exact: true,
        ..Default::default()
    };
    cfg.input.kind = InputKind::Fock;
    cfg.input.n = 0;
    let dir = tempfile::tempdir().unwrap();
    let err = run(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, CliError::Experiment { experiment: "subtract", .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn labels_select_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str("experiment = \"tomography\"\nlabel = \"first\"\nexact = true\n", "t").unwrap();
    let report = run(&cfg, dir.path()).unwrap();
    assert!(report.artifacts.iter().all(|p| p.starts_with(dir.path().join("tomography/first"))));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn binary_reports_config_errors_with_line_and_status_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = 1\n\n[sweep]\nduration_us = -3\n");
    let out = bin().args(["--config", &cfg, "--outdir"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:4"), "{err}");
    assert!(err.contains("sweep.duration_us"), "{err}");

    let unknown = write(dir.path(), "unknown.toml", "[trap]\nomega_q_khz = 1.0\n");
    let out = bin().args(["--config", &unknown]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_q_khz"));
}

#[test]
fn binary_exit_status_3_on_failed_post_selection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "vac.toml", "experiment = \"subtract\"\n[input]\nkind = \"fock\"\nn = 0\n");
    let out = bin()
        .args(["--config", &cfg, "--exact", "--outdir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("post-selection"));
}

#[test]
fn binary_flags_override_the_config_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", "experiment = \"tomography\"\nseed = 1\n");
    let run_once = |outdir: &Path| {
        let out = bin()
            .args(["--config", &cfg, "--seed", "7", "--shots", "500", "--outdir"])
            .arg(outdir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let stdout = run_once(&a);
    run_once(&b);
    assert!(stdout.contains("seed: 7"));
    let run_a = a.join("tomography/seed-7");
    let dataset = fs::read_to_string(run_a.join("input_dataset.json")).unwrap();
    assert!(dataset.contains("\"shots\": 500") || dataset.contains("\"shots\":500"));
    for entry in fs::read_dir(&run_a).unwrap() {
        let name = entry.unwrap().file_name();
        let x = fs::read(run_a.join(&name)).unwrap();
        let y = fs::read(b.join("tomography/seed-7").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn help_lists_the_flags() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--config", "--seed", "--outdir", "--exact", "--shots"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}
