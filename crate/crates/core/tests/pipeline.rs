//! End-to-end pipeline and CLI behaviour on small configurations.

use std::path::Path;
use std::process::Command;

use vfedtrans::dataset::{LatentSpec, PartySizes, SplitConfig};
use vfedtrans::orchestrator::output::read_results;
use vfedtrans::orchestrator::{prepare, fit_pipeline, run_local_baseline, run_pipeline, DatasetSource, ExperimentConfig};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::with(
        DatasetSource::SyntheticLatent {
            spec: LatentSpec {
                n_samples: 400,
                ..LatentSpec::default()
            },
            seed: 1,
        },
        SplitConfig::single(
            200,
            8,
            PartySizes {
                samples: 200,
                features: 8,
                shared: 100,
            },
        ),
    );
    cfg.lrd.epochs = 30;
    cfg.downstream.rf.n_estimators = 20;
    cfg
}

#[test]
fn same_seed_same_everything() {
    let cfg = small();
    let ds = cfg.dataset.load(None).unwrap();
    let a = run_pipeline(&ds, &cfg, 4).unwrap();
    let b = run_pipeline(&ds, &cfg, 4).unwrap();
    assert_eq!(a.accuracy, b.accuracy);
    assert_eq!(a.encoder_digests(), b.encoder_digests());
    assert_eq!(a.transcript.digest(), b.transcript.digest());
    let c = run_pipeline(&ds, &cfg, 5).unwrap();
    assert_ne!(a.encoder_digests(), c.encoder_digests());
}

#[test]
fn no_data_parties_reduces_to_local() {
    let mut cfg = small();
    cfg.split.parties.clear();
    let ds = cfg.dataset.load(None).unwrap();
    for seed in 0..3 {
        let (split, _) = prepare(&ds, &cfg, seed).unwrap();
        let (_, local) = run_local_baseline(&split, &cfg, seed).unwrap();
        let state = fit_pipeline(split, &cfg, seed).unwrap();
        assert!(state.transcript.is_empty());
        assert_eq!(state.enriched.matrix, state.split.task.features);
        assert_eq!(state.accuracy, local);
    }
}

#[test]
fn training_loss_falls() {
    let mut cfg = small();
    cfg.lrd.epochs = 200;
    let ds = cfg.dataset.load(None).unwrap();
    let state = run_pipeline(&ds, &cfg, 0).unwrap();
    let curve = &state.curves[0];
    assert_eq!(curve.len(), 200);
    assert!(curve.last().unwrap().loss < curve[0].loss);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vfedtrans"))
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, small().to_json()).unwrap();
    path
}

#[test]
fn cli_run_writes_one_row_per_seed_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["-q", "run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seeds", "10"])
        .status()
        .unwrap();
    assert!(status.success());
    let rows = read_results(&out.join("results.csv")).unwrap();
    assert_eq!(rows.iter().filter(|r| r.method == "vfedtrans").count(), 10);
    assert_eq!(rows.iter().filter(|r| r.method == "local").count(), 10);
    assert!(out.join("manifest.json").exists());
    assert!(out.join("seed9/transcript.json").exists());

    // The saved transcript and views audit clean.
    let audit = dir.path().join("audit");
    let status = bin()
        .args(["-q", "audit", "--transcript"])
        .arg(out.join("seed0/transcript.json"))
        .arg("--views")
        .arg(out.join("seed0/frl_inputs"))
        .arg("--out")
        .arg(&audit)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(audit.join("audit.json")).unwrap()).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);

    let status = bin().args(["-q", "report", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("| main |"));
}

#[test]
fn cli_generate_exports_splits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("gen");
    let status = bin()
        .args(["-q", "generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seeds", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("split/seed1/split.json").exists());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dataset\": {\"kind\": \"breast\"}}").unwrap();
    let code = |args: &[&str]| bin().args(args).arg("--out").arg(dir.path().join("o")).status().unwrap().code();
    assert_eq!(code(&["run", "--config", bad.to_str().unwrap()]), Some(1));
    assert_eq!(code(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]), Some(1));
    assert_eq!(bin().arg("--help").status().unwrap().code(), Some(0));
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(1));
}
