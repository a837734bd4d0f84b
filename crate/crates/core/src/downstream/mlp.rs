use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::lrd::{Activation, Adam, AdamConfig, LrdError, Network};
use crate::seed::tagged_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    /// Penalty `alpha / (2 n) * ‖W‖²` over weights, `n` being the batch size.
    pub l2_alpha: f64,
    pub max_iter: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Stop once the epoch loss fails to improve by `tol` for
    /// `n_iter_no_change` consecutive epochs.
    pub tol: f64,
    pub n_iter_no_change: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100, 50],
            l2_alpha: 0.01,
            max_iter: 400,
            learning_rate: 0.001,
            batch_size: 200,
            tol: 1e-4,
            n_iter_no_change: 10,
        }
    }
}

/// ReLU network with a softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub network: Network,
    pub epochs_run: usize,
}

fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut p = logits.clone();
    for r in 0..p.rows() {
        let row = p.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    p
}

impl Mlp {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &MlpConfig, seed: u64) -> Result<Self, LrdError> {
        let mut widths = vec![x.cols()];
        widths.extend(&cfg.hidden);
        widths.push(n_classes);
        let mut acts = vec![Activation::Relu; cfg.hidden.len()];
        acts.push(Activation::Identity);
        let mut network = Network::xavier(&widths, &acts, &mut tagged_rng(seed, "mlp-init"))?;
        let mut adam = Adam::new(
            AdamConfig {
                learning_rate: cfg.learning_rate,
                ..AdamConfig::default()
            },
            network.param_count(),
        );
        let mut rng = tagged_rng(seed, "mlp-shuffle");
        let mut order: Vec<usize> = (0..x.rows()).collect();
        let batch = cfg.batch_size.clamp(1, x.rows().max(1));
        let mut best = f64::INFINITY;
        let mut stale = 0;
        let mut epochs_run = 0;
        for epoch in 0..cfg.max_iter {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for (b, chunk) in order.chunks(batch).enumerate() {
                let xb = x.select_rows(chunk);
                let trace = network.forward_trace(&xb)?;
                let probs = softmax_rows(trace.last().expect("nonempty"));
                let n = chunk.len() as f64;
                let mut loss = 0.0;
                let mut g = probs.clone();
                for (r, &i) in chunk.iter().enumerate() {
                    loss -= probs[(r, y[i])].max(1e-300).ln();
                    g.row_mut(r)[y[i]] -= 1.0;
                }
                g = g.scale(1.0 / n);
                let mut sq = 0.0;
                for l in &network.layers {
                    sq += l.weights.iter().map(|w| w * w).sum::<f64>();
                }
                loss = loss / n + cfg.l2_alpha * sq / (2.0 * n);
                if !loss.is_finite() {
                    return Err(LrdError::NonFinite { epoch, batch: b });
                }
                let mut grads = network.backward(&trace, g, &[])?;
                for (gw, l) in grads.weights.iter_mut().zip(&network.layers) {
                    *gw = gw.add(&l.weights.scale(cfg.l2_alpha / n))?;
                }
                adam.step(&mut network, &grads);
                total += loss * n;
            }
            epochs_run = epoch + 1;
            let epoch_loss = total / x.rows() as f64;
            if epoch_loss > best - cfg.tol {
                stale += 1;
            } else {
                stale = 0;
            }
            best = best.min(epoch_loss);
            if cfg.n_iter_no_change > 0 && stale >= cfg.n_iter_no_change {
                break;
            }
        }
        Ok(Self { network, epochs_run })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>, LrdError> {
        let logits = self.network.forward(x)?;
        Ok((0..logits.rows())
            .map(|r| {
                // Argmax with ties to the smallest index.
                let row = logits.row(r);
                let mut best = 0;
                for (i, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect())
    }
}
