use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    ReLU,
    Identity,
    Softmax,
}

/// Fully connected layer `act(W x + b)` with `W` stored row-major (out × in).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl MlpLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut layer = Self::zeros(in_dim, out_dim, activation);
        for w in &mut layer.weights {
            *w = rng.gen_range(-limit..limit);
        }
        layer
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    /// Returns `(pre-activation, output)`.
    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(x.len(), self.in_dim);
        let pre: Vec<f64> = self
            .weights
            .chunks_exact(self.in_dim.max(1))
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect();
        let out = match self.activation {
            Activation::ReLU => pre.iter().map(|&z| z.max(0.0)).collect(),
            Activation::Identity => pre.clone(),
            Activation::Softmax => softmax(&pre),
        };
        (pre, out)
    }

    /// Backpropagates `d_out` (for a softmax layer: the gradient with
    /// respect to the logits), accumulating `scale`-weighted parameter
    /// gradients. Returns the gradient with respect to the input.
    pub fn backward(
        &self,
        x: &[f64],
        pre: &[f64],
        d_out: &[f64],
        scale: f64,
        grad_w: &mut [f64],
        grad_b: &mut [f64],
    ) -> Vec<f64> {
        let dz: Vec<f64> = match self.activation {
            Activation::ReLU => d_out.iter().zip(pre).map(|(&g, &z)| if z > 0.0 { g } else { 0.0 }).collect(),
            Activation::Identity | Activation::Softmax => d_out.to_vec(),
        };
        let mut dx = vec![0.0; self.in_dim];
        for (o, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut grad_w[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += scale * g * x[i];
                dx[i] += row[i] * g;
            }
            grad_b[o] += scale * g;
        }
        dx
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A stack of layers; hidden layers use ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<MlpLayer>,
}

pub(crate) struct MlpTrace {
    inputs: Vec<Vec<f64>>,
    pres: Vec<Vec<f64>>,
    pub(crate) output: Vec<f64>,
}

impl Mlp {
    /// `in_dim → hidden.. → out_dim`, ReLU between layers and `last` on the final one.
    pub fn glorot(in_dim: usize, hidden: &[usize], out_dim: usize, last: Activation, rng: &mut impl Rng) -> Self {
        let dims: Vec<usize> = std::iter::once(in_dim).chain(hidden.iter().copied()).chain([out_dim]).collect();
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { last } else { Activation::ReLU };
                MlpLayer::glorot(dims[i], dims[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.layers.iter().fold(x.to_vec(), |acc, l| l.forward(&acc).1)
    }

    pub(crate) fn trace(&self, x: Vec<f64>, name: &str) -> Result<MlpTrace, ModelError> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pres = Vec::with_capacity(self.layers.len());
        let mut cur = x;
        for (i, layer) in self.layers.iter().enumerate() {
            let (pre, out) = layer.forward(&cur);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite(format!("{name}[{i}]")));
            }
            inputs.push(cur);
            pres.push(pre);
            cur = out;
        }
        Ok(MlpTrace { inputs, pres, output: cur })
    }

    /// `grads` holds (weights, bias) pairs for this stack's layers in order.
    pub(crate) fn backward(&self, trace: &MlpTrace, d_out: Vec<f64>, scale: f64, grads: &mut [Vec<f64>]) -> Vec<f64> {
        let mut d = d_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (gw, gb) = grads[2 * i..2 * i + 2].split_at_mut(1);
            d = layer.backward(&trace.inputs[i], &trace.pres[i], &d, scale, &mut gw[0], &mut gb[0]);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_closed_form() {
        let p = softmax(&[2f64.ln(), 0.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12 && (p[2] - 0.25).abs() < 1e-12);
        let p = softmax(&[1000.0, 0.0, -1000.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(1.0) - 0.7310585786300049).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn glorot_bounds_and_zero_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = MlpLayer::glorot(10, 6, Activation::ReLU, &mut rng);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(l.weights.iter().all(|w| w.abs() <= limit));
        assert!(l.bias.iter().all(|&b| b == 0.0));
        assert_eq!(l.param_count(), 66);
    }

    #[test]
    fn relu_layer_forward() {
        let mut l = MlpLayer::zeros(2, 2, Activation::ReLU);
        l.weights = vec![1.0, 1.0, -1.0, 0.0];
        l.bias = vec![0.5, 0.0];
        assert_eq!(l.forward(&[1.0, 2.0]), (vec![3.5, -1.0], vec![3.5, 0.0]));
    }
}
