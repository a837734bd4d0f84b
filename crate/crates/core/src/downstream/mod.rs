//! Task classifiers trained on raw or enriched representations.

pub mod forest;
pub mod knn;
pub mod mlp;
pub mod tree;

pub use forest::{RandomForest, RfConfig};
pub use knn::{column_stats, Knn, KnnConfig};
pub use mlp::{Mlp, MlpConfig};
pub use tree::{DecisionTree, TreeConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::lrd::LrdError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DownstreamError {
    #[error("shape: {0}")]
    Shape(String),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("accuracy of empty predictions")]
    Empty,
    #[error(transparent)]
    Network(#[from] LrdError),
}

pub type Result<T> = std::result::Result<T, DownstreamError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    Rf,
    Knn,
    Mlp,
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassifierKind::Rf => "rf",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Mlp => "mlp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub rf: RfConfig,
    pub knn: KnnConfig,
    pub mlp: MlpConfig,
}

impl ClassifierConfig {
    pub fn of(kind: ClassifierKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DownstreamError::InvalidConfig(m.to_owned()));
        if self.rf.n_estimators == 0 || self.rf.max_depth == 0 || self.rf.max_features == Some(0) {
            return bad("rf counts must be positive");
        }
        if self.knn.n_neighbors == 0 {
            return bad("knn.n_neighbors must be positive");
        }
        if self.mlp.hidden.contains(&0) || self.mlp.max_iter == 0 || self.mlp.batch_size == 0 {
            return bad("mlp sizes must be positive");
        }
        if !(self.mlp.l2_alpha >= 0.0 && self.mlp.learning_rate > 0.0) {
            return bad("mlp.l2_alpha must be >= 0 and learning_rate > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Rf(RandomForest),
    Knn(Knn),
    Mlp(Mlp),
}

/// A trained classifier. Internally classes are indices into `classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub classes: Vec<usize>,
    pub n_features: usize,
    pub state: ModelState,
}

impl FittedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self.state {
            ModelState::Rf(_) => ClassifierKind::Rf,
            ModelState::Knn(_) => ClassifierKind::Knn,
            ModelState::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }
}

pub fn fit(x: &Matrix, y: &[usize], cfg: &ClassifierConfig, seed: u64) -> Result<FittedModel> {
    cfg.validate()?;
    if x.rows() != y.len() {
        return Err(DownstreamError::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(DownstreamError::SingleClass);
    }
    let yi: Vec<usize> = y
        .iter()
        .map(|c| classes.binary_search(c).expect("class present"))
        .collect();
    let k = classes.len();
    let state = match cfg.kind {
        ClassifierKind::Rf => ModelState::Rf(RandomForest::fit(x, &yi, k, &cfg.rf, seed)),
        ClassifierKind::Knn => ModelState::Knn(Knn::fit(x, &yi, k, &cfg.knn)),
        ClassifierKind::Mlp => ModelState::Mlp(Mlp::fit(x, &yi, k, &cfg.mlp, seed)?),
    };
    Ok(FittedModel {
        classes,
        n_features: x.cols(),
        state,
    })
}

pub fn predict(m: &FittedModel, x: &Matrix) -> Result<Vec<usize>> {
    if x.cols() != m.n_features {
        return Err(DownstreamError::Shape(format!(
            "model expects {} features, got {}",
            m.n_features,
            x.cols()
        )));
    }
    let idx = match &m.state {
        ModelState::Rf(f) => (0..x.rows()).map(|r| f.predict_row(x.row(r))).collect(),
        ModelState::Knn(k) => k.predict(x),
        ModelState::Mlp(n) => n.predict(x)?,
    };
    Ok(idx.into_iter().map(|i: usize| m.classes[i]).collect())
}

/// Fraction of exact matches.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.is_empty() {
        return Err(DownstreamError::Empty);
    }
    if pred.len() != truth.len() {
        return Err(DownstreamError::Shape(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_generate;

    fn blobs() -> (Matrix, Vec<usize>, Matrix, Vec<usize>) {
        let ds = synth_generate(200, 4, 2, 8.0, 1).unwrap();
        let y = ds.labels().unwrap().to_vec();
        let train: Vec<usize> = (0..150).collect();
        let test: Vec<usize> = (150..200).collect();
        (
            ds.features().select_rows(&train),
            y[..150].to_vec(),
            ds.features().select_rows(&test),
            y[150..].to_vec(),
        )
    }

    fn small(kind: ClassifierKind) -> ClassifierConfig {
        let mut c = ClassifierConfig::of(kind);
        c.rf.n_estimators = 25;
        c.mlp.hidden = vec![16];
        c.mlp.max_iter = 200;
        c
    }

    #[test]
    fn defaults_match_reference_table() {
        let c = ClassifierConfig::default();
        assert_eq!((c.rf.n_estimators, c.rf.max_depth), (200, 10));
        assert_eq!(c.knn.n_neighbors, 8);
        assert_eq!(c.mlp.hidden, vec![100, 100, 50]);
        assert_eq!((c.mlp.l2_alpha, c.mlp.max_iter), (0.01, 400));
    }

    #[test]
    fn separable_blobs_are_solved_by_every_model() {
        let (xtr, ytr, xte, yte) = blobs();
        for kind in [ClassifierKind::Rf, ClassifierKind::Knn, ClassifierKind::Mlp] {
            let m = fit(&xtr, &ytr, &small(kind), 3).unwrap();
            let acc = accuracy(&predict(&m, &xte).unwrap(), &yte).unwrap();
            assert_eq!(acc, 1.0, "{kind}");
        }
    }

    #[test]
    fn knn_k1_recovers_training_labels() {
        let (xtr, ytr, _, _) = blobs();
        let mut c = ClassifierConfig::of(ClassifierKind::Knn);
        c.knn.n_neighbors = 1;
        let m = fit(&xtr, &ytr, &c, 0).unwrap();
        assert_eq!(predict(&m, &xtr).unwrap(), ytr);
    }

    #[test]
    fn constant_features_predict_majority() {
        let x = Matrix::zeros(7, 3);
        let y = vec![4, 2, 4, 4, 2, 9, 4];
        for kind in [ClassifierKind::Rf, ClassifierKind::Knn] {
            let m = fit(&x, &y, &small(kind), 0).unwrap();
            assert!(predict(&m, &Matrix::zeros(3, 3)).unwrap().iter().all(|&c| c == 4), "{kind}");
        }
    }

    #[test]
    fn predictions_use_original_labels() {
        let (xtr, ytr, xte, _) = blobs();
        let shifted: Vec<usize> = ytr.iter().map(|c| c * 10 + 3).collect();
        let m = fit(&xtr, &shifted, &small(ClassifierKind::Rf), 1).unwrap();
        assert!(predict(&m, &xte).unwrap().iter().all(|c| *c == 3 || *c == 13));
    }

    #[test]
    fn errors() {
        let x = Matrix::zeros(3, 2);
        assert_eq!(fit(&x, &[1, 1, 1], &small(ClassifierKind::Rf), 0), Err(DownstreamError::SingleClass));
        assert!(fit(&x, &[1, 0], &small(ClassifierKind::Rf), 0).is_err());
        let m = fit(&x, &[1, 0, 1], &small(ClassifierKind::Knn), 0).unwrap();
        assert!(predict(&m, &Matrix::zeros(1, 3)).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 0, 1, 1], &[1, 1, 1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn rf_is_deterministic_and_round_trips() {
        let (xtr, ytr, _, _) = blobs();
        let a = fit(&xtr, &ytr, &small(ClassifierKind::Rf), 5).unwrap();
        let b = fit(&xtr, &ytr, &small(ClassifierKind::Rf), 5).unwrap();
        assert_eq!(a, b);
        let back: FittedModel = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}
