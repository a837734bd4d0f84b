//! Result tables and run artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::experiments::{mean_std, RunResult, SweepResult, TimingReport, TimingRow};
use super::{ExperimentConfig, OrchestratorError, Result};

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub axis: String,
    pub value: String,
    pub seed: u64,
    pub method: String,
    pub model: String,
    /// Empty for skipped sweep points.
    pub accuracy: Option<f64>,
    pub note: String,
}

pub fn run_rows(cfg: &ExperimentConfig, run: &RunResult, axis: &str, value: &str) -> Vec<ResultRow> {
    let model = cfg.downstream.kind.to_string();
    let mut rows = Vec::new();
    for s in &run.seeds {
        for (method, acc) in &s.accuracies {
            rows.push(ResultRow {
                scenario: run.scenario.name().to_owned(),
                axis: axis.to_owned(),
                value: value.to_owned(),
                seed: s.seed,
                method: method.clone(),
                model: model.clone(),
                accuracy: Some(*acc),
                note: s.warnings.join("; "),
            });
        }
    }
    rows
}

pub fn sweep_rows(cfg: &ExperimentConfig, sweep: &SweepResult) -> Vec<ResultRow> {
    let axis = sweep.axis.name();
    let mut rows = Vec::new();
    for p in &sweep.points {
        let value = p.value.to_string();
        match &p.result {
            Ok(run) => rows.extend(run_rows(cfg, run, axis, &value)),
            Err(reason) => rows.push(ResultRow {
                scenario: cfg.scenario.name().to_owned(),
                axis: axis.to_owned(),
                value,
                seed: cfg.seeds[0],
                method: String::new(),
                model: cfg.downstream.kind.to_string(),
                accuracy: None,
                note: format!("skipped: {reason}"),
            }),
        }
    }
    rows
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> OrchestratorError {
    OrchestratorError::runtime("write", format!("{}: {e}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let bad = |e: csv::Error| OrchestratorError::runtime("report", format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(bad)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(bad)
}

pub fn write_timings(path: &Path, rows: &[TimingRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub scenario: String,
    pub axis: String,
    pub value: String,
    pub method: String,
    pub model: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Mean and population std per (scenario, axis, value, method, model),
/// in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryLine> {
    let mut order: Vec<(String, String, String, String, String)> = Vec::new();
    let mut acc: BTreeMap<(String, String, String, String, String), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let Some(a) = r.accuracy else { continue };
        let key = (r.scenario.clone(), r.axis.clone(), r.value.clone(), r.method.clone(), r.model.clone());
        if !acc.contains_key(&key) {
            order.push(key.clone());
        }
        acc.entry(key).or_default().push(a);
    }
    order
        .into_iter()
        .map(|k| {
            let s = mean_std(&acc[&k]);
            SummaryLine {
                scenario: k.0,
                axis: k.1,
                value: k.2,
                method: k.3,
                model: k.4,
                mean: s.mean,
                std: s.std,
                n: s.n,
            }
        })
        .collect()
}

/// Markdown table of `summarize`, accuracies in percent.
pub fn summary_table(lines: &[SummaryLine]) -> String {
    let mut out = String::from("| scenario | axis | value | method | model | accuracy (%) | seeds |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for l in lines {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {:.2} ± {:.2} | {} |",
            l.scenario,
            l.axis,
            l.value,
            l.method,
            l.model,
            100.0 * l.mean,
            100.0 * l.std,
            l.n
        );
    }
    out
}

pub fn timing_table(report: &TimingReport) -> String {
    let mut out = String::new();
    for a in &report.axes {
        let _ = writeln!(
            out,
            "{}: total = {:.4} + {:.4}·x s (R² = {:.3})",
            a.axis, a.fit.intercept, a.fit.slope, a.fit.r2
        );
        for (v, t) in &a.points {
            let _ = writeln!(out, "  {v:>6}  {t:.4} s");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_digest: String,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
    pub created_unix: u64,
}

/// Writes the per-seed artifacts of `run` under `dir` and returns their
/// paths relative to `dir`.
pub fn write_run_artifacts(dir: &Path, run: &RunResult, prefix: &str) -> Result<Vec<String>> {
    let mut written = Vec::new();
    for s in &run.seeds {
        let rel = PathBuf::from(format!("{prefix}seed{}", s.seed));
        let seed_dir = dir.join(&rel);
        std::fs::create_dir_all(&seed_dir).map_err(|e| io_err(&seed_dir, e))?;
        let t = seed_dir.join("transcript.json");
        write_json(&t, &s.transcript)?;
        written.push(rel.join("transcript.json"));
        for e in &s.encoders {
            let name = format!("encoder.{}.json", e.party_id);
            let p = seed_dir.join(&name);
            std::fs::write(&p, e.params.to_json()).map_err(|err| io_err(&p, err))?;
            written.push(rel.join(name));
        }
        let m = seed_dir.join("model.json");
        std::fs::write(&m, s.model.to_json()).map_err(|e| io_err(&m, e))?;
        written.push(rel.join("model.json"));
        let views = seed_dir.join("frl_inputs");
        s.frl_inputs.write_dir(&views).map_err(|e| io_err(&views, e))?;
        written.push(rel.join("frl_inputs"));
    }
    Ok(written.into_iter().map(|p| p.display().to_string()).collect())
}

pub fn write_manifest(dir: &Path, command: &str, cfg: &ExperimentConfig, artifacts: Vec<String>) -> Result<()> {
    let m = Manifest {
        command: command.to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config_digest: cfg.digest(),
        seeds: cfg.seeds.clone(),
        artifacts,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    write_json(&dir.join("manifest.json"), &m)
}
