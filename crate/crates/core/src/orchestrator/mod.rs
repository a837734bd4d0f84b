//! Experiment driver: configs, the per-seed pipeline, scenario variants,
//! sweeps, timing and the transcript audit.

pub mod audit;
pub mod config;
pub mod experiments;
pub mod output;
pub mod pipeline;

pub use audit::{audit_transcript, AuditReport, RawViews, Violation};
pub use config::{DatasetSource, ExperimentConfig, Scenario, SweepAxis, SweepConfig, TimingConfig};
pub use experiments::{
    inductive_eval, linear_fit, mean_std, run_experiment, run_seed, spearman, sweep, timing_report, RunResult,
    SeedResult, Summary, SweepResult, TimingReport, Truncation,
};
pub use pipeline::{
    add_data_hospital, add_local_rows, fit_pipeline, prepare, retask, run_local_baseline, run_pipeline, PhaseTimings,
    PipelineState, Standardizer,
};

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    /// Bad or infeasible configuration. Exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// Failure while running a phase. Exit code 2.
    #[error("{phase} failed: {message}")]
    Runtime { phase: String, message: String },
}

impl OrchestratorError {
    pub fn runtime(phase: &str, e: impl std::fmt::Display) -> Self {
        Self::Runtime {
            phase: phase.to_owned(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, OrchestratorError>;
