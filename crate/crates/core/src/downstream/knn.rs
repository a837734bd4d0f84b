use serde::{Deserialize, Serialize};

use super::tree::argmax_count;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnConfig {
    pub n_neighbors: usize,
    pub standardize: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 8,
            standardize: true,
        }
    }
}

/// Stored reference set, optionally z-scored with the training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    reference: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &KnnConfig) -> Self {
        let d = x.cols();
        let (mean, scale) = if cfg.standardize {
            column_stats(x)
        } else {
            (vec![0.0; d], vec![1.0; d])
        };
        let mut knn = Self {
            k: cfg.n_neighbors,
            mean,
            scale,
            reference: Matrix::zeros(0, d),
            labels: y.to_vec(),
            n_classes,
        };
        knn.reference = knn.transform(x);
        knn
    }

    fn transform(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |r, c| (x[(r, c)] - self.mean[c]) / self.scale[c])
    }

    /// Votes over the `k` nearest references plus any tied with the k-th;
    /// vote ties go to the smallest class.
    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        let z = self.transform(x);
        let k = self.k.min(self.reference.rows());
        let mut dist: Vec<f64> = Vec::with_capacity(self.reference.rows());
        (0..z.rows())
            .map(|r| {
                let q = z.row(r);
                dist.clear();
                dist.extend((0..self.reference.rows()).map(|i| {
                    self.reference
                        .row(i)
                        .iter()
                        .zip(q)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                }));
                let mut sorted = dist.clone();
                sorted.select_nth_unstable_by(k - 1, f64::total_cmp);
                let kth = sorted[k - 1];
                let mut votes = vec![0; self.n_classes];
                for (d, &c) in dist.iter().zip(&self.labels) {
                    if *d <= kth {
                        votes[c] += 1;
                    }
                }
                argmax_count(&votes)
            })
            .collect()
    }
}

/// Column means and standard deviations, with zero deviations replaced by 1.
pub fn column_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows().max(1) as f64;
    let d = x.cols();
    let mut mean = vec![0.0; d];
    for r in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}
