use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{OrchestratorError, Result};
use crate::dataset::{
    load_breast, load_csv, synth_generate, synth_latent, Dataset, InductiveMode, LatentSpec, SplitConfig,
};
use crate::downstream::ClassifierConfig;
use crate::frl::FrlConfig;
use crate::lrd::DistillConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Bundled Wisconsin diagnostic breast-cancer table.
    Breast,
    Csv {
        path: PathBuf,
        #[serde(default)]
        id_column: Option<String>,
        label_column: String,
    },
    SyntheticBlobs {
        n_samples: usize,
        n_features: usize,
        n_classes: usize,
        class_separation: f64,
        #[serde(default)]
        seed: u64,
    },
    SyntheticLatent {
        #[serde(default)]
        spec: LatentSpec,
        #[serde(default)]
        seed: u64,
    },
}

impl DatasetSource {
    /// Relative CSV paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<Dataset> {
        let ds = match self {
            DatasetSource::Breast => load_breast(),
            DatasetSource::Csv {
                path,
                id_column,
                label_column,
            } => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                load_csv(path, id_column.as_deref(), Some(label_column))
            }
            DatasetSource::SyntheticBlobs {
                n_samples,
                n_features,
                n_classes,
                class_separation,
                seed,
            } => synth_generate(*n_samples, *n_features, *n_classes, *class_separation, *seed),
            DatasetSource::SyntheticLatent { spec, seed } => synth_latent(spec, *seed),
        };
        ds.map_err(|e| OrchestratorError::runtime("load", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Main,
    FewShot,
    MultiParty,
    InductiveIid,
    InductiveNoniid,
    NewDataHospital,
    DistillAblation,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Main => "main",
            Scenario::FewShot => "few_shot",
            Scenario::MultiParty => "multi_party",
            Scenario::InductiveIid => "inductive_iid",
            Scenario::InductiveNoniid => "inductive_noniid",
            Scenario::NewDataHospital => "new_data_hospital",
            Scenario::DistillAblation => "distill_ablation",
        }
    }

    pub fn inductive_mode(self) -> Option<InductiveMode> {
        match self {
            Scenario::InductiveIid => Some(InductiveMode::Iid),
            Scenario::InductiveNoniid => Some(InductiveMode::Noniid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TaskFeatures,
    DataFeatures,
    SharedSamples,
    NParties,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::TaskFeatures => "task_features",
            SweepAxis::DataFeatures => "data_features",
            SweepAxis::SharedSamples => "shared_samples",
            SweepAxis::NParties => "n_parties",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub n_parties: Vec<usize>,
    pub shared_samples: Vec<usize>,
    /// Repeats per point; the median is reported.
    pub repeats: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            n_parties: vec![0, 1, 2, 3, 4],
            shared_samples: vec![],
            repeats: 3,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_few_shot() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

/// One experiment: data, hospital layout, protocol, distillation and
/// classifier parameters, and the seeds to repeat it under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub dataset: DatasetSource,
    pub split: SplitConfig,
    #[serde(default)]
    pub frl: FrlConfig,
    #[serde(default)]
    pub lrd: DistillConfig,
    #[serde(default)]
    pub downstream: ClassifierConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub scenario: Scenario,
    /// Share of the downstream training rows kept in the few-shot scenario.
    #[serde(default = "default_few_shot")]
    pub few_shot_fraction: f64,
    /// z-score every party's features before the protocols run.
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub timing: Option<TimingConfig>,
}

impl ExperimentConfig {
    /// Breast defaults: the bundled table, its default hospital sizes and
    /// every protocol, distillation and classifier default.
    pub fn breast() -> Self {
        Self::with(DatasetSource::Breast, SplitConfig::breast())
    }

    pub fn with(dataset: DatasetSource, split: SplitConfig) -> Self {
        Self {
            name: None,
            dataset,
            split,
            frl: FrlConfig::default(),
            lrd: DistillConfig::default(),
            downstream: ClassifierConfig::default(),
            seeds: default_seeds(),
            scenario: Scenario::Main,
            few_shot_fraction: default_few_shot(),
            standardize: true,
            sweep: None,
            timing: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OrchestratorError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            OrchestratorError::Config(m) => OrchestratorError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_string(self).expect("config serializes").as_bytes()))
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(OrchestratorError::Config(m));
        if self.seeds.is_empty() {
            return cfg_err("seeds: at least one seed is required".into());
        }
        if let Err(e) = self.lrd.validate() {
            return cfg_err(format!("lrd: {e}"));
        }
        if let Err(e) = self.downstream.validate() {
            return cfg_err(format!("downstream: {e}"));
        }
        if self.frl.block_size == 0 || self.frl.iter_num == 0 || self.frl.period_num == 0 {
            return cfg_err("frl: block_size, iter_num and period_num must be >= 1".into());
        }
        if self.frl.rank == Some(0) {
            return cfg_err("frl.rank must be >= 1".into());
        }
        if !(self.few_shot_fraction > 0.0 && self.few_shot_fraction <= 1.0) {
            return cfg_err("few_shot_fraction must lie in (0, 1]".into());
        }
        let n_parties = self.split.parties.len() + self.split.multi_party.map_or(0, |m| m.n);
        if self.scenario == Scenario::NewDataHospital && n_parties < 1 {
            return cfg_err("scenario new_data_hospital: split needs at least one data party".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return cfg_err("sweep.values must be nonempty".into());
            }
        }
        if let Some(t) = &self.timing {
            if t.repeats == 0 {
                return cfg_err("timing.repeats must be >= 1".into());
            }
        }
        Ok(())
    }

    /// Loads the dataset and checks the split against it for every seed.
    pub fn load_and_validate(&self, base: Option<&Path>) -> Result<Dataset> {
        self.validate()?;
        let ds = self.dataset.load(base).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        for &seed in &self.seeds {
            self.split
                .validate(ds.rows(), ds.cols(), seed)
                .map_err(|e| OrchestratorError::Config(format!("split: {e}")))?;
        }
        if self.scenario.inductive_mode().is_some() && ds.classes().len() < 2 {
            return Err(OrchestratorError::Config(
                "inductive scenarios need at least two classes".into(),
            ));
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(
            r#"{"dataset": {"kind": "breast"},
                "split": {"I_t": 300, "X_t": 15, "parties": [{"I_d": 400, "X_d": 15, "I_s": 200}]}}"#,
        )
        .unwrap();
        assert_eq!(cfg, ExperimentConfig::breast());
        assert_eq!(cfg.seeds.len(), 10);
        assert_eq!(cfg.lrd.theta, 0.001);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::from_json(
            r#"{"dataset": {"kind": "breast"}, "split": {"I_t": 1, "X_t": 1}, "lrd": {"thetta": 0.1}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("thetta"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"dataset": {"kind": "breast"}, "splitt": {}}"#).unwrap_err();
        assert!(err.to_string().contains("splitt"), "{err}");
    }

    #[test]
    fn round_trips() {
        let mut cfg = ExperimentConfig::with(
            DatasetSource::SyntheticLatent {
                spec: LatentSpec::default(),
                seed: 3,
            },
            SplitConfig::breast(),
        );
        cfg.sweep = Some(SweepConfig {
            axis: SweepAxis::SharedSamples,
            values: vec![50, 100],
        });
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn infeasible_split_is_a_config_error() {
        let mut cfg = ExperimentConfig::breast();
        cfg.split.task_samples = 600;
        assert!(matches!(cfg.load_and_validate(None), Err(OrchestratorError::Config(_))));
        let mut cfg = ExperimentConfig::breast();
        cfg.seeds.clear();
        assert!(matches!(cfg.validate(), Err(OrchestratorError::Config(_))));
    }
}
