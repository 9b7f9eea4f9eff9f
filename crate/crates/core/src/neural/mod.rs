//! Multi-layer perceptron classifier: sigmoid hidden layers, softmax output,
//! cross-entropy loss, trained with Adam and early stopping.

mod train;

pub use train::{mlp_train, TrainConfig, TrainTrace};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ClassLabel;
use crate::numerics::Matrix;

/// Input width: duration, avg_vote and twelve genre indicators.
pub const DEFAULT_LAYERS: [usize; 3] = [14, 100, 3];
/// Probabilities are clipped to `[PROB_FLOOR, 1]` inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("expected {expected} input columns, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label row {0} is not one-hot")]
    NotOneHot(usize),
    #[error("empty input")]
    Empty,
    #[error("need at least {needed} training rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("layer sizes must have at least two positive entries")]
    InvalidLayers,
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, trace: Box<TrainTrace> },
    #[error("could not write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One affine layer `a ↦ a·W + b`; `w` is `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Matrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    pub seed: u64,
}

/// Glorot-uniform initialization of the default `[14, 100, 3]` network.
pub fn mlp_init(seed: u64) -> MlpModel {
    mlp_init_with(&DEFAULT_LAYERS, seed).expect("default layers are valid")
}

/// Weights uniform in `±√(6/(fan_in + fan_out))`, biases zero.
pub fn mlp_init_with(sizes: &[usize], seed: u64) -> Result<MlpModel, NeuralError> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(NeuralError::InvalidLayers);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = sizes
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..=limit))
                .collect();
            Layer {
                w: Matrix::from_vec(fan_in, fan_out, data).expect("sized buffer"),
                b: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(MlpModel {
        sizes: sizes.to_vec(),
        layers,
        seed,
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn affine(a: &Matrix, layer: &Layer) -> Matrix {
    let (n, k) = a.shape();
    let m = layer.w.cols();
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        let row = out.row_mut(i);
        row.copy_from_slice(&layer.b);
        for (kk, &av) in a.row(i).iter().enumerate().take(k) {
            if av != 0.0 {
                for (o, &wv) in row.iter_mut().zip(layer.w.row(kk)) {
                    *o += av * wv;
                }
            }
        }
    }
    out
}

fn softmax_rows(z: &mut Matrix) {
    for i in 0..z.rows() {
        let row = z.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

impl MlpModel {
    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.sizes.last().expect("validated sizes")
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.rows() * l.w.cols() + l.b.len()).sum()
    }

    /// All parameters, layer by layer, weights (row-major) before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(l.w.as_slice());
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let mut at = 0;
        for l in &mut self.layers {
            let (r, c) = l.w.shape();
            l.w = Matrix::from_vec(r, c, flat[at..at + r * c].to_vec()).expect("sized");
            at += r * c;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    fn check_width(&self, x: &Matrix) -> Result<(), NeuralError> {
        if x.cols() != self.n_inputs() {
            return Err(NeuralError::WidthMismatch {
                expected: self.n_inputs(),
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Activations of every layer, input first, softmax output last.
    fn activations(&self, x: &Matrix) -> Vec<Matrix> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = affine(acts.last().expect("non-empty"), layer);
            if i + 1 == self.layers.len() {
                softmax_rows(&mut z);
            } else {
                z = z.map(sigmoid);
            }
            acts.push(z);
        }
        acts
    }

    /// Gradient of the mean cross-entropy over the rows of `x`, flattened
    /// like [`MlpModel::params`], together with the loss.
    pub fn loss_and_gradient(&self, x: &Matrix, onehot: &Matrix) -> (f64, Vec<f64>) {
        let acts = self.activations(x);
        let n = x.rows() as f64;
        let probs = acts.last().expect("output layer");
        let loss = cross_entropy_unchecked(probs, onehot);
        // softmax + cross-entropy: dL/dz = (p − y)/n
        let mut delta = probs.clone();
        for i in 0..delta.rows() {
            for (d, y) in delta.row_mut(i).iter_mut().zip(onehot.row(i)) {
                *d = (*d - y) / n;
            }
        }
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.layers.len());
        for li in (0..self.layers.len()).rev() {
            let a_in = &acts[li];
            let layer = &self.layers[li];
            let (fan_in, fan_out) = layer.w.shape();
            let mut gw = vec![0.0; fan_in * fan_out];
            let mut gb = vec![0.0; fan_out];
            for r in 0..a_in.rows() {
                let d = delta.row(r);
                gb.iter_mut().zip(d).for_each(|(g, v)| *g += v);
                for (k, &av) in a_in.row(r).iter().enumerate() {
                    if av != 0.0 {
                        let g_row = &mut gw[k * fan_out..(k + 1) * fan_out];
                        g_row.iter_mut().zip(d).for_each(|(g, v)| *g += av * v);
                    }
                }
            }
            grads.push((gw, gb));
            if li > 0 {
                // back through W and the sigmoid: δ ← (δ·Wᵀ) ⊙ a(1 − a)
                let mut next = Matrix::zeros(a_in.rows(), fan_in);
                for r in 0..a_in.rows() {
                    let d = delta.row(r);
                    let a_row = a_in.row(r);
                    let out = next.row_mut(r);
                    for k in 0..fan_in {
                        let s: f64 = layer.w.row(k).iter().zip(d).map(|(w, v)| w * v).sum();
                        out[k] = s * a_row[k] * (1.0 - a_row[k]);
                    }
                }
                delta = next;
            }
        }
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads.into_iter().rev() {
            flat.extend(gw);
            flat.extend(gb);
        }
        (loss, flat)
    }
}

/// Class probabilities, one row per input row.
pub fn mlp_forward(model: &MlpModel, x: &Matrix) -> Result<Matrix, NeuralError> {
    model.check_width(x)?;
    Ok(model.activations(x).pop().expect("output layer"))
}

fn cross_entropy_unchecked(probs: &Matrix, onehot: &Matrix) -> f64 {
    let n = probs.rows() as f64;
    let mut total = 0.0;
    for i in 0..probs.rows() {
        for (p, y) in probs.row(i).iter().zip(onehot.row(i)) {
            if *y != 0.0 {
                total -= y * p.max(PROB_FLOOR).ln();
            }
        }
    }
    total / n
}

/// One-hot encoding of class labels.
pub fn one_hot(labels: &[ClassLabel]) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), ClassLabel::ALL.len());
    for (i, l) in labels.iter().enumerate() {
        m[(i, l.index())] = 1.0;
    }
    m
}

fn check_one_hot(onehot: &Matrix) -> Result<(), NeuralError> {
    for i in 0..onehot.rows() {
        let row = onehot.row(i);
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        if ones != 1 || row.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(NeuralError::NotOneHot(i));
        }
    }
    Ok(())
}

/// Mean categorical cross-entropy against one-hot targets.
pub fn mlp_loss(model: &MlpModel, x: &Matrix, onehot: &Matrix) -> Result<f64, NeuralError> {
    if x.rows() == 0 {
        return Err(NeuralError::Empty);
    }
    if onehot.rows() != x.rows() {
        return Err(NeuralError::LengthMismatch {
            rows: x.rows(),
            labels: onehot.rows(),
        });
    }
    if onehot.cols() != model.n_outputs() {
        return Err(NeuralError::WidthMismatch {
            expected: model.n_outputs(),
            found: onehot.cols(),
        });
    }
    check_one_hot(onehot)?;
    let probs = mlp_forward(model, x)?;
    Ok(cross_entropy_unchecked(&probs, onehot))
}

/// Arg-max class per row; ties go to the lower class index.
pub fn mlp_predict(model: &MlpModel, x: &Matrix) -> Result<Vec<ClassLabel>, NeuralError> {
    let probs = mlp_forward(model, x)?;
    Ok(probs
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = j;
                }
            }
            ClassLabel::from_index(best).expect("three outputs")
        })
        .collect())
}

pub fn mlp_accuracy(model: &MlpModel, x: &Matrix, labels: &[ClassLabel]) -> Result<f64, NeuralError> {
    if labels.is_empty() {
        return Err(NeuralError::Empty);
    }
    if labels.len() != x.rows() {
        return Err(NeuralError::LengthMismatch {
            rows: x.rows(),
            labels: labels.len(),
        });
    }
    let pred = mlp_predict(model, x)?;
    let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences with step `h`. The denominator is `|analytic| + |numeric|`
/// floored at 1e-6, below which round-off in the difference quotient
/// (about 1e-16/h) would dominate.
pub fn gradient_check(model: &MlpModel, x: &Matrix, onehot: &Matrix, h: f64) -> f64 {
    let (_, analytic) = model.loss_and_gradient(x, onehot);
    let base = model.params();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        params[i] = base[i] + h;
        probe.set_params(&params);
        let up = cross_entropy_unchecked(&mlp_forward(&probe, x).expect("width"), onehot);
        params[i] = base[i] - h;
        probe.set_params(&params);
        let down = cross_entropy_unchecked(&mlp_forward(&probe, x).expect("width"), onehot);
        params[i] = base[i];
        let numeric = (up - down) / (2.0 * h);
        let denom = (analytic[i].abs() + numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

impl TrainTrace {
    /// Loss curve as CSV (epoch, loss), epochs numbered from 1.
    pub fn write_loss_csv(&self, path: &Path) -> Result<(), NeuralError> {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.loss.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, l));
        }
        std::fs::write(path, out).map_err(|source| NeuralError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
