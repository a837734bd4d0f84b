//! Datasets, party views and the shared-sample scenario splits.

mod csv_io;
mod inductive;
mod split;
mod synth;

pub use csv_io::{load_breast, load_csv, load_csv_reader, BREAST_CSV};
pub use inductive::{inductive_split, InductiveMode, InductiveSplit};
pub use split::{partition_scenario, psi_intersect, PartySizes, ScenarioSplit, SizeRange, MultiPartyRanges, SplitConfig};
pub use synth::{synth_generate, synth_latent, LatentSpec};

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("row {row}: duplicate sample id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("no data rows")]
    NoDataRows,
    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("infeasible split: {0}")]
    Infeasible(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Opaque sample identifier. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(pub String);

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SampleId {
    fn from(s: &str) -> Self {
        SampleId(s.to_owned())
    }
}

impl From<usize> for SampleId {
    fn from(i: usize) -> Self {
        SampleId(format!("{i:06}"))
    }
}

/// A hospital's raw local data: ids, features and (optionally) class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    ids: Vec<SampleId>,
    features: Matrix,
    labels: Option<Vec<usize>>,
    feature_names: Vec<String>,
    /// Original label strings, indexed by class id.
    label_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        ids: Vec<SampleId>,
        features: Matrix,
        labels: Option<Vec<usize>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(DatasetError::NoDataRows);
        }
        if ids.len() != features.rows() {
            return Err(DatasetError::InvalidArgument(format!(
                "{} ids for {} rows",
                ids.len(),
                features.rows()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(DatasetError::InvalidArgument(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for (row, id) in ids.iter().enumerate() {
            if !seen.insert(id) {
                return Err(DatasetError::DuplicateId {
                    row: row + 1,
                    id: id.0.clone(),
                });
            }
        }
        if let Some(y) = &labels {
            if y.len() != ids.len() {
                return Err(DatasetError::InvalidArgument(format!("{} labels for {} rows", y.len(), ids.len())));
            }
            let classes = y.iter().collect::<HashSet<_>>().len();
            if classes < 2 {
                return Err(DatasetError::TooFewClasses(classes));
            }
        }
        Ok(Self {
            ids,
            features,
            labels,
            feature_names,
            label_names: None,
        })
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Self {
        self.label_names = Some(names);
        self
    }

    /// Same samples and features with a different label column.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.ids.clone(), self.features.clone(), Some(labels), self.feature_names.clone())
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn cols(&self) -> usize {
        self.features.cols()
    }

    /// Sorted distinct class ids.
    pub fn classes(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.labels.iter().flatten().copied().collect::<HashSet<_>>().into_iter().collect();
        c.sort_unstable();
        c
    }

    /// Rows `idx` as a new dataset (labels kept, class-count check skipped).
    pub(crate) fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select_rows(idx),
            labels: self.labels.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect()),
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyRole {
    Task,
    Data,
}

/// One hospital's slice of the source data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyView {
    pub party_id: String,
    pub role: PartyRole,
    pub ids: Vec<SampleId>,
    pub features: Matrix,
    /// Present iff `role == Task`.
    pub labels: Option<Vec<usize>>,
    pub feature_names: Vec<String>,
    /// Source-dataset column index of each feature.
    pub source_columns: Vec<usize>,
}

impl PartyView {
    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn row_index(&self) -> HashMap<&SampleId, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id, i)).collect()
    }

    /// Row positions of `ids`, in the given order.
    pub fn positions_of(&self, ids: &[SampleId]) -> Result<Vec<usize>> {
        let index = self.row_index();
        ids.iter()
            .map(|id| {
                index.get(id).copied().ok_or_else(|| {
                    DatasetError::InvalidArgument(format!("party `{}` has no sample `{id}`", self.party_id))
                })
            })
            .collect()
    }

    /// Feature rows for `ids`, in the given order.
    pub fn rows_for(&self, ids: &[SampleId]) -> Result<Matrix> {
        Ok(self.features.select_rows(&self.positions_of(ids)?))
    }

    /// Same party restricted to rows `idx`.
    pub fn subset(&self, idx: &[usize]) -> PartyView {
        PartyView {
            party_id: self.party_id.clone(),
            role: self.role,
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select_rows(idx),
            labels: self.labels.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect()),
            feature_names: self.feature_names.clone(),
            source_columns: self.source_columns.clone(),
        }
    }

    /// Keeps only the first `k` feature columns.
    pub fn truncate_features(&self, k: usize) -> PartyView {
        let k = k.min(self.width());
        PartyView {
            features: self.features.leading_cols(k),
            feature_names: self.feature_names[..k].to_vec(),
            source_columns: self.source_columns[..k].to_vec(),
            ..self.clone()
        }
    }
}
