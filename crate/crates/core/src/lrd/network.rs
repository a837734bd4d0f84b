//! Fully-connected feed-forward network with manual backpropagation.
//!
//! Shared by the distillation autoencoder and the downstream MLP. Batches are
//! row-major `n x width` matrices; layer `l` computes `a_l = f(a_{l-1} W_l + b_l)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LrdError, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative_at_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs x outputs`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols()
    }

    fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = x.matmul(&self.weights)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        Ok(z)
    }
}

/// Gradient of a scalar loss with respect to every layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    /// Flattened in the same order as [`Network::param_mut`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Dense>,
}

impl Network {
    /// Xavier-uniform weights, zero biases. `widths` has one more entry than
    /// `activations`.
    pub fn xavier<R: Rng + ?Sized>(widths: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if widths.len() != activations.len() + 1 || activations.is_empty() {
            return Err(LrdError::Shape(format!(
                "{} widths for {} layers",
                widths.len(),
                activations.len()
            )));
        }
        if widths.contains(&0) {
            return Err(LrdError::Shape("layer widths must be positive".into()));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Dense {
                    weights: Matrix::from_fn(w[0], w[1], |_, _| rng.random_range(-limit..limit)),
                    bias: vec![0.0; w[1]],
                    activation,
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Output after the first `k` layers.
    pub fn forward_until(&self, x: &Matrix, k: usize) -> Result<Matrix> {
        self.check_input(x)?;
        let mut a = x.clone();
        for layer in &self.layers[..k] {
            a = layer.forward(&a)?;
        }
        Ok(a)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.forward_until(x, self.layers.len())
    }

    /// Every layer's output, input first.
    pub fn forward_trace(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        self.check_input(x)?;
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(x.clone());
        for layer in &self.layers {
            let next = layer.forward(trace.last().expect("nonempty"))?;
            trace.push(next);
        }
        Ok(trace)
    }

    /// Backpropagates `grad_out = dL/d(output)`. `inject` adds extra
    /// `dL/d(a_k)` terms at intermediate layer outputs (`k` counts layers).
    pub fn backward(&self, trace: &[Matrix], grad_out: Matrix, inject: &[(usize, &Matrix)]) -> Result<Gradients> {
        let depth = self.layers.len();
        if trace.len() != depth + 1 {
            return Err(LrdError::Shape(format!("trace of {} for {depth} layers", trace.len())));
        }
        let mut weights = vec![Matrix::zeros(0, 0); depth];
        let mut bias = vec![Vec::new(); depth];
        let mut g = grad_out;
        for l in (0..depth).rev() {
            for (k, extra) in inject {
                if *k == l + 1 {
                    g = g.add(extra)?;
                }
            }
            let layer = &self.layers[l];
            let out = &trace[l + 1];
            if g.shape() != out.shape() {
                return Err(LrdError::Shape(format!(
                    "gradient {:?} vs layer output {:?}",
                    g.shape(),
                    out.shape()
                )));
            }
            let act = layer.activation;
            let mut delta = g;
            for (d, a) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                *d *= act.derivative_at_output(*a);
            }
            weights[l] = trace[l].t_matmul(&delta)?;
            let mut db = vec![0.0; layer.outputs()];
            for r in 0..delta.rows() {
                for (acc, v) in db.iter_mut().zip(delta.row(r)) {
                    *acc += v;
                }
            }
            bias[l] = db;
            g = if l > 0 {
                delta.matmul(&layer.weights.transpose())?
            } else {
                delta
            };
        }
        Ok(Gradients { weights, bias })
    }

    /// Parameter `idx` in flattened order: each layer's weights (row-major)
    /// followed by its bias.
    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for layer in &mut self.layers {
            let nw = layer.weights.as_slice().len();
            if idx < nw {
                return &mut layer.weights.as_mut_slice()[idx];
            }
            idx -= nw;
            if idx < layer.bias.len() {
                return &mut layer.bias[idx];
            }
            idx -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Calls `f(index, param, grad)` for every parameter in flattened order.
    pub fn update(&mut self, grads: &Gradients, mut f: impl FnMut(usize, &mut f64, f64)) {
        let mut idx = 0;
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grads.weights).zip(&grads.bias) {
            for (p, g) in layer.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                f(idx, p, *g);
                idx += 1;
            }
            for (p, g) in layer.bias.iter_mut().zip(gb) {
                f(idx, p, *g);
                idx += 1;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_width() {
            return Err(LrdError::Shape(format!(
                "input width {} but network expects {}",
                x.cols(),
                self.input_width()
            )));
        }
        Ok(())
    }
}
