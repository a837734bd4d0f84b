use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Result, SampleId};
use crate::linalg::{random_orthogonal, Matrix};
use crate::seed::rng;

/// Gaussian-blob classification data.
///
/// Row `i` gets label `i mod n_classes`. Class `c` is centred at
/// `class_separation * s_c * e_k` with `k = (c / 2) mod n_features` and
/// `s_c = +1` for even `c`, `-1` for odd `c`; every feature then receives
/// independent unit-variance Gaussian noise. Classes 0 and 1 therefore sit
/// `2 * class_separation` apart along the first axis, and the Bayes accuracy
/// of that pair is `Phi(class_separation)`.
pub fn synth_generate(
    n_samples: usize,
    n_features: usize,
    n_classes: usize,
    class_separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_classes < 2 || n_features < 2 || n_samples < n_classes {
        return Err(DatasetError::InvalidArgument(format!(
            "synth_generate needs n_classes >= 2, n_features >= 2, n_samples >= n_classes \
             (got {n_samples}, {n_features}, {n_classes})"
        )));
    }
    let mut rng = rng(seed);
    let labels: Vec<usize> = (0..n_samples).map(|i| i % n_classes).collect();
    let features = Matrix::from_fn(n_samples, n_features, |r, c| {
        let class = labels[r];
        let axis = (class / 2) % n_features;
        let sign = if class % 2 == 0 { 1.0 } else { -1.0 };
        let centre = if c == axis { class_separation * sign } else { 0.0 };
        centre + rng.sample::<f64, _>(StandardNormal)
    });
    let ids = (0..n_samples).map(SampleId::from).collect();
    let names = (0..n_features).map(|c| format!("f{c}")).collect();
    Dataset::new(ids, features, Some(labels), names)
}

/// Recipe for the controlled latent-factor dataset used by the distillation,
/// sweep and inductive experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentSpec {
    pub n_samples: usize,
    /// Width of the task block (first columns of the dataset).
    pub task_features: usize,
    /// Width of the data block (following columns).
    pub data_features: usize,
    pub n_classes: usize,
    /// Weight of the two label factors inside the task block.
    pub task_signal: f64,
    /// Weight of the label factors in each data-block column.
    pub data_signal: f64,
    /// Standard deviation of independent per-cell noise.
    pub noise: f64,
}

impl Default for LatentSpec {
    fn default() -> Self {
        Self {
            n_samples: 1200,
            task_features: 8,
            data_features: 8,
            n_classes: 2,
            task_signal: 0.35,
            data_signal: 1.0,
            noise: 0.05,
        }
    }
}

/// Two label factors `z0, z1 ~ N(0, 1)` decide the class: the angle of
/// `(z0, z1)` is cut into `n_classes` equal sectors. The task block is a fixed
/// random rotation of `[task_signal*z0, task_signal*z1, n_1, ..]` with unit
/// nuisance factors `n_j`, so the label lives in a weak oblique direction of
/// the task features. Data-block column `j` is `data_signal * z_{j mod 2}`,
/// with `z1` carried at [`SECOND_FACTOR_WEIGHT`] so the two factors get
/// distinct singular values. Both blocks get `N(0, noise^2)` cell noise.
pub const SECOND_FACTOR_WEIGHT: f64 = 0.6;

pub fn synth_latent(spec: &LatentSpec, seed: u64) -> Result<Dataset> {
    let LatentSpec {
        n_samples,
        task_features,
        data_features,
        n_classes,
        task_signal,
        data_signal,
        noise,
    } = *spec;
    if n_classes < 2 || task_features < 2 || data_features < 1 || n_samples < n_classes {
        return Err(DatasetError::InvalidArgument(format!("infeasible latent spec {spec:?}")));
    }
    let mut rng = rng(seed);
    let rotation = random_orthogonal(task_features, task_features, &mut rng)?;
    let cell_noise = Normal::new(0.0, noise.max(0.0))
        .map_err(|e| DatasetError::InvalidArgument(format!("noise: {e}")))?;

    let width = task_features + data_features;
    let mut data = Vec::with_capacity(n_samples * width);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let angle = z[1].atan2(z[0]) + std::f64::consts::PI;
        let sector = ((angle / std::f64::consts::TAU) * n_classes as f64).floor() as usize;
        labels.push(sector.min(n_classes - 1));

        let mut factors = vec![0.0; task_features];
        factors[0] = task_signal * z[0];
        factors[1] = task_signal * z[1];
        for f in factors.iter_mut().skip(2) {
            *f = rng.sample(StandardNormal);
        }
        let task = rotation.matvec(&factors)?;
        data.extend(task.iter().map(|v| v + cell_noise.sample(&mut rng)));
        for j in 0..data_features {
            let w = if j % 2 == 0 { 1.0 } else { SECOND_FACTOR_WEIGHT };
            data.push(data_signal * w * z[j % 2] + cell_noise.sample(&mut rng));
        }
    }
    let features = Matrix::new(n_samples, width, data)?;
    let ids = (0..n_samples).map(SampleId::from).collect();
    let names = (0..task_features)
        .map(|c| format!("t{c}"))
        .chain((0..data_features).map(|c| format!("d{c}")))
        .collect();
    Dataset::new(ids, features, Some(labels), names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_nn_accuracy(train: &Matrix, ytr: &[usize], test: &Matrix, yte: &[usize]) -> f64 {
        let mut hits = 0;
        for i in 0..test.rows() {
            let best = (0..train.rows())
                .min_by(|&a, &b| {
                    let da: f64 = train.row(a).iter().zip(test.row(i)).map(|(x, y)| (x - y).powi(2)).sum();
                    let db: f64 = train.row(b).iter().zip(test.row(i)).map(|(x, y)| (x - y).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            hits += usize::from(ytr[best] == yte[i]);
        }
        hits as f64 / test.rows() as f64
    }

    #[test]
    fn well_separated_blobs_are_easy_for_1nn() {
        let ds = synth_generate(100, 4, 2, 6.0, 11).unwrap();
        let test_ds = synth_generate(100, 4, 2, 6.0, 12).unwrap();
        let acc = one_nn_accuracy(ds.features(), ds.labels().unwrap(), test_ds.features(), test_ds.labels().unwrap());
        assert!(acc >= 0.95, "1-NN accuracy {acc}");
    }

    #[test]
    fn zero_separation_carries_no_signal() {
        // Same features for both classes in distribution; 1-NN sits near chance.
        let train = synth_generate(400, 2, 2, 0.0, 1).unwrap();
        let test = synth_generate(400, 2, 2, 0.0, 2).unwrap();
        let acc = one_nn_accuracy(train.features(), train.labels().unwrap(), test.features(), test.labels().unwrap());
        assert!((acc - 0.5).abs() < 0.1, "accuracy {acc}");
        let tiny = synth_generate(10, 2, 2, 0.0, 3).unwrap();
        assert_eq!(tiny.classes(), vec![0, 1]);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = synth_generate(50, 3, 3, 1.0, 77).unwrap();
        let b = synth_generate(50, 3, 3, 1.0, 77).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = synth_latent(&LatentSpec::default(), 5).unwrap();
        let d = synth_latent(&LatentSpec::default(), 5).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn latent_classes_are_balanced() {
        let spec = LatentSpec {
            n_classes: 4,
            n_samples: 4000,
            ..LatentSpec::default()
        };
        let ds = synth_latent(&spec, 3).unwrap();
        for c in 0..4 {
            let n = ds.labels().unwrap().iter().filter(|&&y| y == c).count();
            assert!((n as f64 - 1000.0).abs() < 120.0, "class {c}: {n}");
        }
        assert_eq!(ds.cols(), 16);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(synth_generate(10, 2, 1, 1.0, 0).is_err());
        assert!(synth_generate(10, 1, 2, 1.0, 0).is_err());
    }
}
