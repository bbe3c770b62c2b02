//! Models with closed-form mini-batch gradients.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::rng::SeededRng;
use crate::vector::GradVec;

use super::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Least squares with a bias.
    Linear,
    /// Sigmoid for two classes, softmax otherwise.
    Logistic,
    /// tanh hidden layers and a softmax output.
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(ModelKind::Linear),
            "logistic" | "softmax" => Some(ModelKind::Logistic),
            "mlp" => Some(ModelKind::Mlp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Hidden layer widths (Mlp only).
    pub hidden: Vec<usize>,
    pub weight_decay: f64,
    pub init_scale: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec { kind: ModelKind::Logistic, hidden: vec![32], weight_decay: 1e-4, init_scale: 0.01 }
    }
}

/// A model bound to a feature dimension and class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    /// Layer widths from input to output.
    layers: Vec<usize>,
    init_scale: f64,
}

impl Model {
    pub fn new(spec: &ModelSpec, dim: usize, num_classes: usize) -> Result<Model> {
        if dim == 0 {
            return invalid("model needs at least one feature");
        }
        let layers = match spec.kind {
            ModelKind::Linear => vec![dim, 1],
            ModelKind::Logistic if num_classes == 2 => vec![dim, 1],
            ModelKind::Logistic => {
                if num_classes < 2 {
                    return invalid("logistic model needs num_classes >= 2");
                }
                vec![dim, num_classes]
            }
            ModelKind::Mlp => {
                if spec.hidden.is_empty() || spec.hidden.contains(&0) {
                    return invalid("mlp needs nonzero hidden layer widths");
                }
                if num_classes < 2 {
                    return invalid("mlp needs num_classes >= 2");
                }
                let mut l = vec![dim];
                l.extend(&spec.hidden);
                l.push(num_classes);
                l
            }
        };
        if !(spec.init_scale >= 0.0 && spec.init_scale.is_finite()) {
            return invalid("init_scale must be >= 0");
        }
        Ok(Model { kind: spec.kind, layers, init_scale: spec.init_scale })
    }

    pub fn num_params(&self) -> usize {
        self.layers.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    fn binary(&self) -> bool {
        self.kind == ModelKind::Logistic && self.layers[1] == 1
    }

    pub fn init(&self, rng: &mut SeededRng) -> GradVec {
        GradVec::new((0..self.num_params()).map(|_| self.init_scale * rng.sample::<f64, _>(StandardNormal)).collect())
    }

    /// Per-layer activations for one example (pre-softmax output last).
    fn forward(&self, w: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut offset = 0;
        let depth = self.layers.len() - 1;
        for l in 0..depth {
            let (inp, out) = (self.layers[l], self.layers[l + 1]);
            let weights = &w[offset..offset + out * inp];
            let bias = &w[offset + out * inp..offset + out * (inp + 1)];
            let prev = &acts[l];
            let mut z: Vec<f64> = (0..out)
                .map(|o| bias[o] + weights[o * inp..(o + 1) * inp].iter().zip(prev).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < depth {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
            offset += out * (inp + 1);
        }
        acts
    }

    /// Loss of one example and the gradient of that loss w.r.t. the output.
    fn output_loss(&self, out: &[f64], label: usize, target: f64) -> (f64, Vec<f64>) {
        match self.kind {
            ModelKind::Linear => {
                let r = out[0] - target;
                (0.5 * r * r, vec![r])
            }
            _ if self.binary() => {
                let y = if label == 1 { 1.0 } else { -1.0 };
                let m = y * out[0];
                let loss = if m > 0.0 { (-m).exp().ln_1p() } else { -m + m.exp().ln_1p() };
                let s = 1.0 / (1.0 + m.exp());
                (loss, vec![-y * s])
            }
            _ => {
                let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = out.iter().map(|v| (v - max).exp()).collect();
                let total: f64 = exps.iter().sum();
                let loss = total.ln() + max - out[label];
                let mut g: Vec<f64> = exps.iter().map(|e| e / total).collect();
                g[label] -= 1.0;
                (loss, g)
            }
        }
    }

    /// Mean loss over `idx`, without regularization.
    pub fn loss(&self, w: &GradVec, data: &Dataset, idx: &[usize]) -> f64 {
        let total: f64 = idx
            .iter()
            .map(|&i| {
                let acts = self.forward(w, data.row(i));
                self.output_loss(acts.last().expect("output"), data.labels[i], data.targets[i]).0
            })
            .sum();
        total / idx.len().max(1) as f64
    }

    /// Mean loss and its exact gradient over `idx`.
    pub fn loss_and_grad(&self, w: &GradVec, data: &Dataset, idx: &[usize]) -> (f64, GradVec) {
        let mut grad = vec![0.0; self.num_params()];
        let mut total = 0.0;
        let depth = self.layers.len() - 1;
        let mut offsets = Vec::with_capacity(depth);
        let mut o = 0;
        for l in 0..depth {
            offsets.push(o);
            o += self.layers[l + 1] * (self.layers[l] + 1);
        }
        for &i in idx {
            let acts = self.forward(w, data.row(i));
            let (loss, mut delta) = self.output_loss(&acts[depth], data.labels[i], data.targets[i]);
            total += loss;
            for l in (0..depth).rev() {
                let (inp, out) = (self.layers[l], self.layers[l + 1]);
                let off = offsets[l];
                let prev = &acts[l];
                for (r, &dr) in delta.iter().enumerate() {
                    let row = &mut grad[off + r * inp..off + (r + 1) * inp];
                    for (g, &a) in row.iter_mut().zip(prev) {
                        *g += dr * a;
                    }
                    grad[off + out * inp + r] += dr;
                }
                if l > 0 {
                    let weights = &w.as_slice()[off..off + out * inp];
                    delta = (0..inp)
                        .map(|c| {
                            let back: f64 = (0..out).map(|r| weights[r * inp + c] * delta[r]).sum();
                            back * (1.0 - prev[c] * prev[c])
                        })
                        .collect();
                }
            }
        }
        let scale = 1.0 / idx.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (total * scale, GradVec::new(grad))
    }

    pub fn predict(&self, w: &GradVec, x: &[f64]) -> usize {
        let acts = self.forward(w, x);
        let out = acts.last().expect("output");
        if self.kind == ModelKind::Linear {
            0
        } else if self.binary() {
            usize::from(out[0] > 0.0)
        } else {
            out.iter().enumerate().fold(0, |best, (k, v)| if *v > out[best] { k } else { best })
        }
    }

    /// Classification accuracy; for `Linear`, the coefficient of
    /// determination clamped to [0, 1].
    pub fn accuracy(&self, w: &GradVec, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        if self.kind == ModelKind::Linear {
            let mean = data.targets.iter().sum::<f64>() / data.len() as f64;
            let tot: f64 = data.targets.iter().map(|t| (t - mean).powi(2)).sum();
            let all: Vec<usize> = (0..data.len()).collect();
            let res = 2.0 * self.loss(w, data, &all) * data.len() as f64;
            return if tot > 0.0 { (1.0 - res / tot).clamp(0.0, 1.0) } else { 0.0 };
        }
        let hits = (0..data.len()).filter(|&i| self.predict(w, data.row(i)) == data.labels[i]).count();
        hits as f64 / data.len() as f64
    }
}
