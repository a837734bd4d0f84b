//! The `vfedtrans` command line. Exit codes: 0 ok, 1 config error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{partition_scenario, Dataset, InductiveMode};
use crate::frl::Transcript;
use crate::orchestrator::output::{
    read_results, run_rows, summarize, summary_table, sweep_rows, timing_table, write_json, write_manifest,
    write_results, write_run_artifacts, write_timings,
};
use crate::orchestrator::{
    audit_transcript, inductive_eval, run_experiment, sweep, timing_report, ExperimentConfig, OrchestratorError,
    RawViews, Result, RunResult, SweepAxis,
};
use crate::orchestrator::experiments::TimingRow;

/// Seeds as a count (`10` runs seeds 0..10) or an explicit list (`3,7,11`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedArg(pub Vec<u64>);

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = |e: std::num::ParseIntError| format!("invalid seed list {s:?}: {e}");
        if s.contains(',') {
            let seeds = s.split(',').map(|t| t.trim().parse::<u64>().map_err(bad)).collect::<std::result::Result<Vec<_>, _>>()?;
            return Ok(Self(seeds));
        }
        let n = s.trim().parse::<u64>().map_err(bad)?;
        if n == 0 {
            return Err("seed count must be >= 1".into());
        }
        Ok(Self((0..n).collect()))
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, env = "VFEDTRANS_OUT", default_value = "vfedtrans-out")]
    pub out: PathBuf,
    /// Seed count (`10` = seeds 0..10) or comma-separated list; overrides the config.
    #[arg(long)]
    pub seeds: Option<SeedArg>,
    /// Seeds run concurrently.
    #[arg(long, default_value_t = 1)]
    pub parallel_seeds: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AxisArg {
    TaskFeatures,
    DataFeatures,
    SharedSamples,
    NParties,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::TaskFeatures => SweepAxis::TaskFeatures,
            AxisArg::DataFeatures => SweepAxis::DataFeatures,
            AxisArg::SharedSamples => SweepAxis::SharedSamples,
            AxisArg::NParties => SweepAxis::NParties,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Iid,
    Noniid,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition the configured dataset and write every party's view per seed.
    Generate(Common),
    /// Run the configured scenario over all seeds.
    Run(Common),
    /// Vary one split parameter; with --timing, measure wall-clock per phase instead.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides `sweep.axis`.
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Overrides `sweep.values` (comma-separated).
        #[arg(long, value_delimiter = ',')]
        values: Vec<usize>,
        /// Run the timing report (uses `timing` from the config or its defaults).
        #[arg(long)]
        timing: bool,
    },
    /// Evaluate trained encoders and classifiers on held-out new samples.
    Inductive {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "iid")]
        mode: ModeArg,
    },
    /// Check a transcript against the parties' raw protocol inputs.
    Audit {
        #[arg(long)]
        transcript: PathBuf,
        /// Directory of `<name>.<party>.csv` raw views.
        #[arg(long)]
        views: PathBuf,
        /// Where to write audit.json; defaults to the transcript's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize results.csv in an output directory into report.md.
    Report {
        #[arg(long, env = "VFEDTRANS_OUT", default_value = "vfedtrans-out")]
        out: PathBuf,
    },
}

#[derive(Debug, Parser)]
#[command(name = "vfedtrans", version, about = "Federated representation transfer across hospitals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// More progress output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

struct Log {
    level: i8,
}

impl Log {
    fn info(&self, msg: impl AsRef<str>) {
        if self.level >= 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn debug(&self, msg: impl AsRef<str>) {
        if self.level >= 1 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, Dataset)> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(SeedArg(seeds)) = &common.seeds {
        cfg.seeds = seeds.clone();
    }
    if common.parallel_seeds == 0 {
        return Err(OrchestratorError::Config("--parallel-seeds must be >= 1".into()));
    }
    let ds = cfg.load_and_validate(common.config.parent())?;
    Ok((cfg, ds))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| OrchestratorError::runtime("write", format!("{}: {e}", dir.display())))
}

fn seed_timings(run: &RunResult) -> Vec<TimingRow> {
    run.seeds
        .iter()
        .map(|s| TimingRow {
            axis: String::new(),
            value: 0,
            seed: s.seed,
            repeat: 0,
            frl: s.timings.frl,
            lrd: s.timings.lrd,
            downstream: s.timings.downstream,
            total: s.timings.total(),
        })
        .collect()
}

fn finish_run(name: &str, out: &Path, cfg: &ExperimentConfig, run: &RunResult, log: &Log) -> Result<()> {
    create_dir(out)?;
    let rows = run_rows(cfg, run, "", "");
    write_results(&out.join("results.csv"), &rows)?;
    write_timings(&out.join("timings.csv"), &seed_timings(run))?;
    let summary = summarize(&rows);
    write_json(&out.join("summary.json"), &summary)?;
    let mut artifacts = vec!["results.csv".into(), "timings.csv".into(), "summary.json".into()];
    artifacts.extend(write_run_artifacts(out, run, "")?);
    write_manifest(out, name, cfg, artifacts)?;
    log.info(summary_table(&summary));
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let log = Log {
        level: if cli.quiet { -1 } else { cli.verbose.min(1) as i8 },
    };
    match cli.command {
        Command::Generate(common) => {
            let (cfg, ds) = load(&common)?;
            create_dir(&common.out)?;
            let mut artifacts = Vec::new();
            for &seed in &cfg.seeds {
                let split = partition_scenario(&ds, &cfg.split, seed).map_err(|e| OrchestratorError::runtime("partition", e))?;
                let rel = format!("split/seed{seed}");
                let dir = common.out.join(&rel);
                split.export_csv(&dir).map_err(|e| OrchestratorError::runtime("write", format!("{}: {e}", dir.display())))?;
                log.debug(format!("seed {seed}: wrote {}", dir.display()));
                artifacts.push(rel);
            }
            write_manifest(&common.out, "generate", &cfg, artifacts)?;
            log.info(format!("wrote {} splits to {}", cfg.seeds.len(), common.out.display()));
        }
        Command::Run(common) => {
            let (cfg, ds) = load(&common)?;
            log.debug(format!("{}: {} seeds, scenario {}", common.config.display(), cfg.seeds.len(), cfg.scenario.name()));
            let run = run_experiment(&ds, &cfg, common.parallel_seeds)?;
            finish_run("run", &common.out, &cfg, &run, &log)?;
        }
        Command::Inductive { common, mode } => {
            let (cfg, ds) = load(&common)?;
            let mode = match mode {
                ModeArg::Iid => InductiveMode::Iid,
                ModeArg::Noniid => InductiveMode::Noniid,
            };
            let run = inductive_eval(&ds, &cfg, mode, common.parallel_seeds)?;
            finish_run("inductive", &common.out, &cfg, &run, &log)?;
        }
        Command::Sweep {
            common,
            axis,
            values,
            timing,
        } => {
            let (cfg, ds) = load(&common)?;
            create_dir(&common.out)?;
            if timing {
                let t = cfg.timing.clone().unwrap_or_default();
                let report = timing_report(&ds, &cfg, &t)?;
                write_timings(&common.out.join("timings.csv"), &report.rows)?;
                write_json(&common.out.join("timing.json"), &report.axes)?;
                write_manifest(&common.out, "sweep --timing", &cfg, vec!["timings.csv".into(), "timing.json".into()])?;
                log.info(timing_table(&report));
                return Ok(());
            }
            let (axis, values) = match (axis, cfg.sweep.as_ref()) {
                (Some(a), _) if !values.is_empty() => (a.into(), values),
                (a, Some(s)) => (
                    a.map_or(s.axis, Into::into),
                    if values.is_empty() { s.values.clone() } else { values },
                ),
                _ => {
                    return Err(OrchestratorError::Config(
                        "sweep needs --axis and --values, or a `sweep` section in the config".into(),
                    ))
                }
            };
            let result = sweep(&ds, &cfg, axis, &values, common.parallel_seeds)?;
            let rows = sweep_rows(&cfg, &result);
            for p in &result.points {
                if let Err(reason) = &p.result {
                    log.info(format!("warning: skipped {} = {}: {reason}", axis.name(), p.value));
                }
            }
            write_results(&common.out.join("results.csv"), &rows)?;
            let summary = summarize(&rows);
            write_json(&common.out.join("summary.json"), &summary)?;
            write_manifest(&common.out, "sweep", &cfg, vec!["results.csv".into(), "summary.json".into()])?;
            log.info(summary_table(&summary));
        }
        Command::Audit { transcript, views, out } => {
            let text = std::fs::read_to_string(&transcript)
                .map_err(|e| OrchestratorError::Config(format!("{}: {e}", transcript.display())))?;
            let t: Transcript = serde_json::from_str(&text)
                .map_err(|e| OrchestratorError::Config(format!("{}: {e}", transcript.display())))?;
            let raw = RawViews::read_dir(&views)?;
            let report = audit_transcript(&t, &raw);
            let dir = out.unwrap_or_else(|| transcript.parent().map(Path::to_path_buf).unwrap_or_default());
            create_dir(&dir)?;
            write_json(&dir.join("audit.json"), &report)?;
            for v in &report.violations {
                log.info(format!("violation at step {} ({} -> {}): {}", v.step, v.sender, v.receiver, v.reasons.join("; ")));
            }
            log.info(format!("{} records, {} violations", report.records, report.violations.len()));
        }
        Command::Report { out } => {
            let rows = read_results(&out.join("results.csv"))?;
            let summary = summarize(&rows);
            let mut md = summary_table(&summary);
            let timing = out.join("timing.json");
            if let Ok(text) = std::fs::read_to_string(&timing) {
                let axes: Vec<crate::orchestrator::experiments::AxisTiming> = serde_json::from_str(&text)
                    .map_err(|e| OrchestratorError::runtime("report", format!("{}: {e}", timing.display())))?;
                md.push('\n');
                md.push_str(&timing_table(&crate::orchestrator::TimingReport { rows: vec![], axes }));
            }
            let p = out.join("report.md");
            std::fs::write(&p, &md).map_err(|e| OrchestratorError::runtime("write", format!("{}: {e}", p.display())))?;
            log.info(md);
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
