use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{argmax_count, DecisionTree, TreeConfig};
use crate::linalg::Matrix;
use crate::seed::tagged_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_estimators: 200,
            max_depth: 10,
            max_features: None,
            bootstrap: true,
        }
    }
}

/// Bagged CART trees voting by majority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    n_classes: usize,
}

impl RandomForest {
    /// Tree `t` draws its bootstrap and split features from its own stream,
    /// derived from `seed` and `t`.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &RfConfig, seed: u64) -> Self {
        let n = x.rows();
        let d = x.cols();
        let max_features = cfg.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize);
        let tree_cfg = TreeConfig {
            max_depth: cfg.max_depth,
            max_features: Some(max_features),
        };
        let trees = (0..cfg.n_estimators)
            .map(|t| {
                let mut rng = tagged_rng(seed, &format!("tree:{t}"));
                let rows: Vec<usize> = if cfg.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(x, y, n_classes, &rows, tree_cfg, &mut rng)
            })
            .collect();
        Self { trees, n_classes }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        argmax_count(&votes)
    }
}
