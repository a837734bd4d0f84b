use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, PartyRole, PartyView, Result, SampleId};
use crate::linalg::Matrix;
use crate::seed::tagged_rng;

/// Per-data-hospital sizes: held samples, held features and samples shared
/// with the task hospital.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartySizes {
    #[serde(rename = "I_d")]
    pub samples: usize,
    #[serde(rename = "X_d")]
    pub features: usize,
    #[serde(rename = "I_s")]
    pub shared: usize,
}

/// Inclusive integer interval, written `[lo, hi]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange(pub usize, pub usize);

impl SizeRange {
    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        rng.random_range(self.0.min(self.1)..=self.0.max(self.1))
    }
}

/// Data hospitals whose sizes are drawn uniformly from intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiPartyRanges {
    pub n: usize,
    #[serde(rename = "I_d")]
    pub samples: SizeRange,
    #[serde(rename = "X_d")]
    pub features: SizeRange,
    #[serde(rename = "I_s")]
    pub shared: SizeRange,
}

/// How samples and features are dealt to the hospitals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(rename = "I_t")]
    pub task_samples: usize,
    #[serde(rename = "X_t")]
    pub task_features: usize,
    #[serde(default)]
    pub parties: Vec<PartySizes>,
    #[serde(default)]
    pub multi_party: Option<MultiPartyRanges>,
    /// Seeded shuffle of the column order before assignment.
    #[serde(default)]
    pub shuffle_columns: bool,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.2
}

impl SplitConfig {
    pub fn single(task_samples: usize, task_features: usize, party: PartySizes) -> Self {
        Self {
            task_samples,
            task_features,
            parties: vec![party],
            multi_party: None,
            shuffle_columns: false,
            test_fraction: default_test_fraction(),
        }
    }

    /// Breast column of the default hospital-size table.
    pub fn breast() -> Self {
        Self::single(
            300,
            15,
            PartySizes {
                samples: 400,
                features: 15,
                shared: 200,
            },
        )
    }

    /// Explicit parties followed by any interval-drawn ones. Interval draws use
    /// their own sub-seed so party shapes do not depend on anything else.
    pub fn resolve_parties(&self, seed: u64) -> Vec<PartySizes> {
        let mut parties = self.parties.clone();
        if let Some(ranges) = &self.multi_party {
            let mut rng = tagged_rng(seed, "multi-party-shapes");
            for _ in 0..ranges.n {
                let samples = ranges.samples.draw(&mut rng);
                let features = ranges.features.draw(&mut rng);
                let shared = ranges.shared.draw(&mut rng);
                parties.push(PartySizes {
                    samples,
                    features,
                    shared,
                });
            }
        }
        parties
    }

    pub fn validate(&self, rows: usize, cols: usize, seed: u64) -> Result<()> {
        let (it, xt) = (self.task_samples, self.task_features);
        if it == 0 || xt == 0 {
            return Err(DatasetError::Infeasible(format!("I_t = {it}, X_t = {xt}: both must be >= 1")));
        }
        if it > rows {
            return Err(DatasetError::Infeasible(format!("I_t = {it} > rows = {rows}")));
        }
        if xt > cols {
            return Err(DatasetError::Infeasible(format!("X_t = {xt} > cols = {cols}")));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(DatasetError::Infeasible(format!(
                "test_fraction = {} outside [0, 1)",
                self.test_fraction
            )));
        }
        for (i, p) in self.resolve_parties(seed).iter().enumerate() {
            let who = format!("party {}", i + 1);
            if p.shared == 0 {
                return Err(DatasetError::Infeasible(format!("{who}: I_s = 0, shared samples must be nonempty")));
            }
            if p.features == 0 {
                return Err(DatasetError::Infeasible(format!("{who}: X_d = 0")));
            }
            if p.shared > it {
                return Err(DatasetError::Infeasible(format!("{who}: I_s = {} > I_t = {it}", p.shared)));
            }
            if p.shared > p.samples {
                return Err(DatasetError::Infeasible(format!(
                    "{who}: I_s = {} > I_d = {}",
                    p.shared, p.samples
                )));
            }
            if it + p.samples - p.shared > rows {
                return Err(DatasetError::Infeasible(format!(
                    "{who}: I_t + I_d - I_s = {} > rows = {rows}",
                    it + p.samples - p.shared
                )));
            }
            if xt + p.features > cols {
                return Err(DatasetError::Infeasible(format!(
                    "{who}: X_t + X_d = {} > cols = {cols}",
                    xt + p.features
                )));
            }
        }
        Ok(())
    }
}

/// Task view, data views and their pairwise shared-sample alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSplit {
    pub task: PartyView,
    pub data_parties: Vec<PartyView>,
    /// Per data party: sorted `I_t ∩ I_d`.
    pub shared_ids: Vec<Vec<SampleId>>,
    /// Positions in `task` used for downstream training / testing.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl ScenarioSplit {
    /// Row-aligned shared slices `(S_t, S_d)` for data party `i`.
    pub fn shared_slices(&self, i: usize) -> Result<(Matrix, Matrix)> {
        let ids = &self.shared_ids[i];
        Ok((self.task.rows_for(ids)?, self.data_parties[i].rows_for(ids)?))
    }

    /// Writes every view as CSV plus the shared-id lists and a JSON summary.
    pub fn export_csv(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        write_view(&dir.join(format!("{}.csv", self.task.party_id)), &self.task)?;
        for (party, shared) in self.data_parties.iter().zip(&self.shared_ids) {
            write_view(&dir.join(format!("{}.csv", party.party_id)), party)?;
            let mut f = std::fs::File::create(dir.join(format!("shared_{}.csv", party.party_id)))?;
            writeln!(f, "id")?;
            for id in shared {
                writeln!(f, "{id}")?;
            }
        }
        let summary = serde_json::json!({
            "task": {"party_id": self.task.party_id, "I_t": self.task.rows(), "X_t": self.task.width(),
                     "columns": self.task.source_columns},
            "data_parties": self.data_parties.iter().zip(&self.shared_ids).map(|(p, s)| serde_json::json!({
                "party_id": p.party_id, "I_d": p.rows(), "X_d": p.width(), "I_s": s.len(),
                "X_s": self.task.width() + p.width(), "columns": p.source_columns,
            })).collect::<Vec<_>>(),
            "train_rows": self.train_rows.len(),
            "test_rows": self.test_rows.len(),
        });
        std::fs::write(dir.join("split.json"), serde_json::to_string_pretty(&summary)?)
    }
}

fn write_view(path: &Path, view: &PartyView) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_owned()];
    if view.labels.is_some() {
        header.push("label".to_owned());
    }
    header.extend(view.feature_names.iter().cloned());
    w.write_record(&header)?;
    for r in 0..view.rows() {
        let mut rec = vec![view.ids[r].0.clone()];
        if let Some(y) = &view.labels {
            rec.push(y[r].to_string());
        }
        rec.extend(view.features.row(r).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()
}

/// Sorted intersection of two id lists. Stand-in for private set intersection.
pub fn psi_intersect(a: &[SampleId], b: &[SampleId]) -> Vec<SampleId> {
    let in_b: HashSet<&SampleId> = b.iter().collect();
    let mut out: Vec<SampleId> = a.iter().filter(|id| in_b.contains(id)).cloned().collect();
    out.sort();
    out.dedup();
    out
}

/// Deals samples and features to one task and several data hospitals.
///
/// Rows are shuffled with the seed. The task takes the first `I_t` rows. The
/// first data party shares the first `I_s` task rows and privately holds the
/// `I_d - I_s` rows after the task block; later parties draw their shared rows
/// from the task rows and their private rows from the non-task rows with their
/// own sub-seeds. The task takes the first `X_t` columns (after an optional
/// seeded column shuffle); the first party the next `X_d`, later parties a
/// seeded draw from the non-task columns.
pub fn partition_scenario(ds: &Dataset, cfg: &SplitConfig, seed: u64) -> Result<ScenarioSplit> {
    let labels = ds
        .labels()
        .ok_or_else(|| DatasetError::InvalidArgument("partition needs a labelled dataset".into()))?;
    cfg.validate(ds.rows(), ds.cols(), seed)?;
    let parties = cfg.resolve_parties(seed);

    let mut row_order: Vec<usize> = (0..ds.rows()).collect();
    row_order.shuffle(&mut tagged_rng(seed, "rows"));
    let mut col_order: Vec<usize> = (0..ds.cols()).collect();
    if cfg.shuffle_columns {
        col_order.shuffle(&mut tagged_rng(seed, "columns"));
    }

    let it = cfg.task_samples;
    let xt = cfg.task_features;
    let task_rows = &row_order[..it];
    let other_rows = &row_order[it..];
    let task_cols = &col_order[..xt];
    let other_cols = &col_order[xt..];

    let task = make_view(ds, "t", PartyRole::Task, task_rows, task_cols, Some(labels));

    let mut data_parties = Vec::with_capacity(parties.len());
    let mut shared_ids = Vec::with_capacity(parties.len());
    for (i, p) in parties.iter().enumerate() {
        let party_id = format!("d{}", i + 1);
        let (shared, private, cols): (Vec<usize>, Vec<usize>, Vec<usize>) = if i == 0 {
            (
                task_rows[..p.shared].to_vec(),
                other_rows[..p.samples - p.shared].to_vec(),
                other_cols[..p.features].to_vec(),
            )
        } else {
            let mut rng = tagged_rng(seed, &format!("party-layout:{party_id}"));
            let shared = index::sample(&mut rng, it, p.shared).into_iter().map(|k| task_rows[k]).collect();
            let private = index::sample(&mut rng, other_rows.len(), p.samples - p.shared)
                .into_iter()
                .map(|k| other_rows[k])
                .collect();
            let mut cols: Vec<usize> = index::sample(&mut rng, other_cols.len(), p.features)
                .into_iter()
                .map(|k| other_cols[k])
                .collect();
            cols.sort_unstable();
            (shared, private, cols)
        };
        let rows: Vec<usize> = shared.iter().chain(&private).copied().collect();
        let view = make_view(ds, &party_id, PartyRole::Data, &rows, &cols, None);
        let ids = psi_intersect(&task.ids, &view.ids);
        if ids.is_empty() {
            return Err(DatasetError::Infeasible(format!("{party_id} shares no samples with the task party")));
        }
        shared_ids.push(ids);
        data_parties.push(view);
    }

    let mut positions: Vec<usize> = (0..it).collect();
    positions.shuffle(&mut tagged_rng(seed, "train-test"));
    let n_test = (cfg.test_fraction * it as f64).round() as usize;
    let mut test_rows = positions[..n_test].to_vec();
    let mut train_rows = positions[n_test..].to_vec();
    test_rows.sort_unstable();
    train_rows.sort_unstable();

    Ok(ScenarioSplit {
        task,
        data_parties,
        shared_ids,
        train_rows,
        test_rows,
    })
}

fn make_view(
    ds: &Dataset,
    party_id: &str,
    role: PartyRole,
    rows: &[usize],
    cols: &[usize],
    labels: Option<&[usize]>,
) -> PartyView {
    PartyView {
        party_id: party_id.to_owned(),
        role,
        ids: rows.iter().map(|&r| ds.ids()[r].clone()).collect(),
        features: ds.features().select_rows(rows).select_cols(cols),
        labels: labels.map(|y| rows.iter().map(|&r| y[r]).collect()),
        feature_names: cols.iter().map(|&c| ds.feature_names()[c].clone()).collect(),
        source_columns: cols.to_vec(),
    }
}
