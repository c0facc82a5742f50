use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Layer {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// ReLU on every hidden layer, identity on the output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// One training sample: input, selected output and its regression target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl MlpParams {
    pub fn zeros(sizes: &[usize]) -> MlpParams {
        MlpParams { layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(sizes: &[usize], rng: &mut Rng) -> MlpParams {
        let mut p = MlpParams::zeros(sizes);
        for layer in &mut p.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        p
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        s.extend(self.layers.last().map(|l| l.outputs));
        s
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.trace(input).pop().unwrap_or_default()
    }

    /// Activations of every layer, input first.
    fn trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![input.to_vec()];
        let last = self.layers.len().saturating_sub(1);
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(acts.last().expect("non-empty"));
            if i < last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
        }
        acts
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    /// Mean squared error over the selected outputs of a batch.
    pub fn loss(&self, batch: &[Sample]) -> f64 {
        let preds: Vec<f64> = batch.iter().map(|s| self.forward(s.input)[s.action]).collect();
        let targets: Vec<f64> = batch.iter().map(|s| s.target).collect();
        mse_loss(&preds, &targets)
    }

    /// Gradient of [`MlpParams::loss`] with respect to every parameter, plus
    /// the loss itself. Outputs other than the selected one get no gradient.
    pub fn backward(&self, batch: &[Sample]) -> (MlpParams, f64) {
        let mut grads = MlpParams { layers: self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect() };
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for s in batch {
            let acts = self.trace(s.input);
            let out = acts.last().expect("non-empty");
            let residual = out[s.action] - s.target;
            loss += residual * residual;
            let mut delta = vec![0.0; out.len()];
            delta[s.action] = 2.0 * residual / n;
            for (li, layer) in self.layers.iter().enumerate().rev() {
                let input = &acts[li];
                let g = &mut grads.layers[li];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, x) in row.iter_mut().zip(input) {
                        *gw += d * x;
                    }
                }
                if li == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (grads, loss / n)
    }
}

pub fn mse_loss(preds: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(preds.len(), targets.len(), "prediction and target batches differ in length");
    assert!(!preds.is_empty(), "empty batch");
    preds.iter().zip(targets).map(|(p, t)| (t - p).powi(2)).sum::<f64>() / preds.len() as f64
}
