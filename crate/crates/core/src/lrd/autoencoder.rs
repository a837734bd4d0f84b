use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::{Adam, AdamConfig};
use super::network::{Activation, Gradients, Network};
use super::{LrdError, Result};
use crate::dataset::SampleId;
use crate::frl::FedRepresentation;
use crate::linalg::Matrix;
use crate::seed::tagged_rng;

pub const ENCODER_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistillNorm {
    /// Mean squared distance.
    #[default]
    L2,
    /// Mean absolute distance.
    L1,
}

/// Distillation training parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistillConfig {
    pub theta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Total layer count, encoder and decoder each take half.
    pub depth: usize,
    /// Latent width. Defaults to the federated representation's rank.
    pub latent: Option<usize>,
    pub norm: DistillNorm,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            theta: 0.001,
            learning_rate: 0.001,
            batch_size: 100,
            epochs: 500,
            depth: 6,
            latent: None,
            norm: DistillNorm::L2,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LrdError::InvalidConfig(m.to_owned()));
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return bad("theta must be finite and >= 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.depth < 2 || self.depth % 2 != 0 {
            return bad("depth must be an even number >= 2");
        }
        if self.latent == Some(0) {
            return bad("latent must be >= 1");
        }
        Ok(())
    }
}

/// Layer widths `in → … → r → … → in`. Hidden widths interpolate
/// geometrically between the input and latent widths.
pub fn autoencoder_widths(input: usize, latent: usize, depth: usize) -> Vec<usize> {
    let half = depth / 2;
    let ratio = latent as f64 / input as f64;
    let enc: Vec<usize> = (0..=half)
        .map(|k| {
            if k == 0 {
                input
            } else if k == half {
                latent
            } else {
                ((input as f64 * ratio.powf(k as f64 / half as f64)).round() as usize).max(1)
            }
        })
        .collect();
    let mut widths = enc.clone();
    widths.extend(enc.iter().rev().skip(1));
    widths
}

/// Weights of the encoder `Enc` and its decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub version: u32,
    pub input_width: usize,
    pub latent_width: usize,
    pub network: Network,
}

impl EncoderParams {
    /// Fresh autoencoder: sigmoid hidden layers, linear latent and output.
    pub fn init(input: usize, latent: usize, depth: usize, seed: u64) -> Result<Self> {
        if input == 0 || latent == 0 {
            return Err(LrdError::Shape("input and latent widths must be positive".into()));
        }
        let widths = autoencoder_widths(input, latent, depth);
        let half = depth / 2;
        let acts: Vec<Activation> = (1..=depth)
            .map(|l| {
                if l == half || l == depth {
                    Activation::Identity
                } else {
                    Activation::Sigmoid
                }
            })
            .collect();
        let network = Network::xavier(&widths, &acts, &mut tagged_rng(seed, "lrd-init"))?;
        Ok(Self {
            version: ENCODER_FORMAT_VERSION,
            input_width: input,
            latent_width: latent,
            network,
        })
    }

    pub fn encoder_depth(&self) -> usize {
        self.network.layers.len() / 2
    }

    /// `Enc(x)` for every row of `x`.
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        self.network.forward_until(x, self.encoder_depth())
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.network.forward(x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("encoder serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| LrdError::Format(e.to_string()))?;
        if p.version != ENCODER_FORMAT_VERSION {
            return Err(LrdError::Format(format!("unsupported encoder version {}", p.version)));
        }
        let widths: Vec<usize> = p.network.layers.iter().map(|l| l.inputs()).collect();
        let chained = p.network.layers.windows(2).all(|w| w[0].outputs() == w[1].inputs());
        if !chained
            || p.network.layers.len() % 2 != 0
            || widths.first() != Some(&p.input_width)
            || p.network.output_width() != p.input_width
            || p.network.layers[p.encoder_depth() - 1].outputs() != p.latent_width
        {
            return Err(LrdError::Format("layer shapes do not chain".into()));
        }
        Ok(p)
    }

    /// SHA-256 of the JSON document.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Mean batch loss split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    /// Mean over the batch of `‖Dec(Enc(x)) − x‖² / |X_t|`.
    pub reconstruction: f64,
    /// Sum over shared rows of the distance to `fed`, divided by batch size.
    pub distillation: f64,
    pub theta: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.theta * self.distillation
    }
}

fn distance(z: &[f64], fed: &[f64], norm: DistillNorm) -> f64 {
    let s: f64 = match norm {
        DistillNorm::L2 => z.iter().zip(fed).map(|(a, b)| (a - b) * (a - b)).sum(),
        DistillNorm::L1 => z.iter().zip(fed).map(|(a, b)| (a - b).abs()).sum(),
    };
    s / z.len() as f64
}

/// Per-sample loss: reconstruction error, plus `theta` times the distance
/// between `Enc(x)` and `fed` when the sample is shared.
pub fn lrd_loss(params: &EncoderParams, x: &[f64], fed: Option<&[f64]>, theta: f64, norm: DistillNorm) -> Result<f64> {
    let xm = Matrix::new(1, x.len(), x.to_vec())?;
    let (parts, _) = lrd_gradient(params, &xm, &[fed], theta, norm)?;
    Ok(parts.total())
}

/// Mean batch loss and its exact gradient. `fed[i]` is the federated latent
/// row of sample `i` when that sample is shared.
pub fn lrd_gradient(
    params: &EncoderParams,
    x: &Matrix,
    fed: &[Option<&[f64]>],
    theta: f64,
    norm: DistillNorm,
) -> Result<(LossParts, Gradients)> {
    let n = x.rows();
    if n == 0 {
        return Err(LrdError::Shape("empty batch".into()));
    }
    if fed.len() != n {
        return Err(LrdError::Shape(format!("{} fed rows for a batch of {n}", fed.len())));
    }
    let r = params.latent_width;
    if let Some(bad) = fed.iter().flatten().find(|f| f.len() != r) {
        return Err(LrdError::Shape(format!("fed row of width {} but latent is {r}", bad.len())));
    }
    let net = &params.network;
    let trace = net.forward_trace(x)?;
    let out = trace.last().expect("nonempty");
    let latent = &trace[params.encoder_depth()];
    let d = x.cols() as f64;
    let nf = n as f64;

    let mut recon = 0.0;
    let mut g_out = Matrix::zeros(n, x.cols());
    for i in 0..n {
        for ((g, o), t) in g_out.row_mut(i).iter_mut().zip(out.row(i)).zip(x.row(i)) {
            let e = o - t;
            recon += e * e;
            *g = 2.0 * e / (d * nf);
        }
    }
    recon /= d * nf;

    let mut distill = 0.0;
    let mut g_lat = Matrix::zeros(n, r);
    let mut any_shared = false;
    for (i, f) in fed.iter().enumerate() {
        let Some(f) = f else { continue };
        any_shared = true;
        let z = latent.row(i);
        distill += distance(z, f, norm);
        for ((g, a), b) in g_lat.row_mut(i).iter_mut().zip(z).zip(*f) {
            *g = theta / (r as f64 * nf)
                * match norm {
                    DistillNorm::L2 => 2.0 * (a - b),
                    DistillNorm::L1 => {
                        if a > b {
                            1.0
                        } else if a < b {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                };
        }
    }
    distill /= nf;

    let inject: Vec<(usize, &Matrix)> = if any_shared && theta != 0.0 {
        vec![(params.encoder_depth(), &g_lat)]
    } else {
        vec![]
    };
    let grads = net.backward(&trace, g_out, &inject)?;
    Ok((
        LossParts {
            reconstruction: recon,
            distillation: distill,
            theta,
        },
        grads,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
    pub reconstruction: f64,
    pub distillation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEncoder {
    pub params: EncoderParams,
    /// Sample-weighted mean batch loss of every epoch.
    pub curve: Vec<EpochLoss>,
}

impl TrainedEncoder {
    pub fn write_curve_csv(&self, path: &std::path::Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.curve {
            w.serialize(row)?;
        }
        w.flush()
    }
}

/// Trains `Enc` on the task party's rows `x` (ids `ids`). Rows whose id appears
/// in `fed` get the distillation term; every fed id must be among `ids`.
pub fn train_distilled_encoder(
    x: &Matrix,
    ids: &[SampleId],
    fed: &FedRepresentation,
    cfg: &DistillConfig,
    seed: u64,
) -> Result<TrainedEncoder> {
    if ids.len() != x.rows() {
        return Err(LrdError::Shape(format!("{} ids for {} rows", ids.len(), x.rows())));
    }
    if let Some(r) = cfg.latent {
        if r != fed.matrix.cols() {
            return Err(LrdError::Shape(format!(
                "latent {r} differs from federated rank {}",
                fed.matrix.cols()
            )));
        }
    }
    let pos: HashMap<&SampleId, usize> = fed.ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let targets: Vec<Option<usize>> = ids.iter().map(|id| pos.get(id).copied()).collect();
    let hits = targets.iter().flatten().count();
    if hits != fed.ids.len() {
        return Err(LrdError::Shape(format!(
            "{} of {} federated ids are not task rows",
            fed.ids.len() - hits,
            fed.ids.len()
        )));
    }
    train(x, &targets, Some(&fed.matrix), fed.matrix.cols(), cfg, seed)
}

/// Reconstruction-only training, i.e. a plain autoencoder.
pub fn train_autoencoder(x: &Matrix, latent: usize, cfg: &DistillConfig, seed: u64) -> Result<TrainedEncoder> {
    train(x, &vec![None; x.rows()], None, latent, cfg, seed)
}

fn train(
    x: &Matrix,
    targets: &[Option<usize>],
    fed: Option<&Matrix>,
    latent: usize,
    cfg: &DistillConfig,
    seed: u64,
) -> Result<TrainedEncoder> {
    cfg.validate()?;
    if x.rows() == 0 {
        return Err(LrdError::Shape("no training rows".into()));
    }
    let mut params = EncoderParams::init(x.cols(), latent, cfg.depth, seed)?;
    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        },
        params.network.param_count(),
    );
    let mut rng = tagged_rng(seed, "lrd-shuffle");
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut acc = LossParts::default();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select_rows(chunk);
            let fb: Vec<Option<&[f64]>> = chunk
                .iter()
                .map(|&i| targets[i].and_then(|k| fed.map(|f| f.row(k))))
                .collect();
            let (parts, grads) = lrd_gradient(&params, &xb, &fb, cfg.theta, cfg.norm)?;
            if !parts.total().is_finite() {
                return Err(LrdError::NonFinite { epoch, batch: b });
            }
            adam.step(&mut params.network, &grads);
            if !params.network.is_finite() {
                return Err(LrdError::NonFinite { epoch, batch: b });
            }
            let w = chunk.len() as f64;
            acc.reconstruction += parts.reconstruction * w;
            acc.distillation += parts.distillation * w;
        }
        let n = x.rows() as f64;
        let (reconstruction, distillation) = (acc.reconstruction / n, acc.distillation / n);
        curve.push(EpochLoss {
            epoch: epoch + 1,
            loss: reconstruction + cfg.theta * distillation,
            reconstruction,
            distillation,
        });
    }
    Ok(TrainedEncoder { params, curve })
}
