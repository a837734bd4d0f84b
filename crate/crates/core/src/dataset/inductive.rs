use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{partition_scenario, Dataset, DatasetError, PartyRole, PartyView, Result, ScenarioSplit, SplitConfig};
use crate::seed::tagged_rng;

/// Share of the chosen classes' samples held out as new samples.
pub const NONIID_HOLDOUT_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InductiveMode {
    Iid,
    Noniid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductiveSplit {
    pub split: ScenarioSplit,
    /// Held-out samples in the task party's feature space, with labels.
    pub new_samples: PartyView,
    pub mode: InductiveMode,
    /// Classes the non-IID holdout was drawn from (empty for IID).
    pub holdout_classes: Vec<usize>,
}

/// Holds out new samples, then partitions the rest.
///
/// Non-IID: half of the classes (rounded down, at least one) are picked; 40%
/// of their samples become new samples. IID: the same number of samples is
/// drawn uniformly from all rows. Either way the remaining rows go through
/// [`partition_scenario`] and never reach encoder or classifier training.
pub fn inductive_split(ds: &Dataset, cfg: &SplitConfig, seed: u64, mode: InductiveMode) -> Result<InductiveSplit> {
    let labels = ds
        .labels()
        .ok_or_else(|| DatasetError::InvalidArgument("inductive split needs labels".into()))?;
    let classes = ds.classes();
    if classes.len() < 2 {
        return Err(DatasetError::TooFewClasses(classes.len()));
    }

    let mut rng = tagged_rng(seed, "inductive-holdout");
    let mut shuffled = classes.clone();
    shuffled.shuffle(&mut rng);
    let mut chosen: Vec<usize> = shuffled[..(classes.len() / 2).max(1)].to_vec();
    chosen.sort_unstable();

    let pool: Vec<usize> = (0..ds.rows()).filter(|&r| chosen.contains(&labels[r])).collect();
    let n_new = (NONIID_HOLDOUT_FRACTION * pool.len() as f64).round() as usize;

    let mut held: Vec<usize> = match mode {
        InductiveMode::Noniid => index::sample(&mut rng, pool.len(), n_new).into_iter().map(|k| pool[k]).collect(),
        InductiveMode::Iid => index::sample(&mut rng, ds.rows(), n_new).into_iter().collect(),
    };
    held.sort_unstable();
    let kept: Vec<usize> = (0..ds.rows()).filter(|r| held.binary_search(r).is_err()).collect();

    let split = partition_scenario(&ds.subset(&kept), cfg, seed)?;
    let held_ds = ds.subset(&held);
    let cols = &split.task.source_columns;
    let new_samples = PartyView {
        party_id: format!("{}-new", split.task.party_id),
        role: PartyRole::Task,
        ids: held_ds.ids().to_vec(),
        features: held_ds.features().select_cols(cols),
        labels: held_ds.labels().map(<[usize]>::to_vec),
        feature_names: cols.iter().map(|&c| ds.feature_names()[c].clone()).collect(),
        source_columns: cols.clone(),
    };
    Ok(InductiveSplit {
        split,
        new_samples,
        mode,
        holdout_classes: if mode == InductiveMode::Noniid { chosen } else { vec![] },
    })
}
