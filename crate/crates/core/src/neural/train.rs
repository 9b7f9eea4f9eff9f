use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::numerics::Matrix;

use super::{mlp_loss, one_hot, MlpModel, NeuralError};

pub const MIN_TRAIN_ROWS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stopping: bool,
    pub validation_fraction: f64,
    pub patience: usize,
    /// Minimum validation-loss decrease that resets the patience counter.
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 500,
            early_stopping: true,
            validation_fraction: 0.1,
            patience: 10,
            tol: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch size and epoch count must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation fraction must lie in (0, 1)");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !(self.tol >= 0.0) {
            return bad("tolerance must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean training cross-entropy per epoch, accumulated over mini-batches.
    pub loss: Vec<f64>,
    /// Hold-out cross-entropy per epoch (empty without early stopping).
    pub validation_loss: Vec<f64>,
    pub best_validation_loss: Option<f64>,
    /// 1-based epoch whose parameters were restored.
    pub best_epoch: Option<usize>,
    /// Number of epochs run.
    pub stopped_epoch: usize,
    pub early_stopped: bool,
    pub n_train: usize,
    pub n_validation: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Mini-batch Adam on the mean cross-entropy.
///
/// With early stopping the last `validation_fraction` of a seeded shuffle is
/// held out; training stops once the hold-out loss has not improved by `tol`
/// for `patience` epochs, and the parameters of the lowest hold-out loss are
/// restored. Epoch `e` shuffles with stream `e + 1` of the seed.
pub fn mlp_train(
    model: &MlpModel,
    x: &Matrix,
    labels: &[ClassLabel],
    config: &TrainConfig,
) -> Result<(MlpModel, TrainTrace), NeuralError> {
    config.validate()?;
    model.check_width(x)?;
    let n = x.rows();
    if labels.len() != n {
        return Err(NeuralError::LengthMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    if n < MIN_TRAIN_ROWS {
        return Err(NeuralError::TooFewRows {
            needed: MIN_TRAIN_ROWS,
            got: n,
        });
    }
    if model.n_outputs() != ClassLabel::ALL.len() {
        return Err(NeuralError::WidthMismatch {
            expected: ClassLabel::ALL.len(),
            found: model.n_outputs(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let (train_idx, val_idx) = if config.early_stopping {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
        let n_val = ((n as f64 * config.validation_fraction).ceil() as usize).clamp(1, n - 1);
        let val = order.split_off(n - n_val);
        (order, val)
    } else {
        (order, Vec::new())
    };
    let y_all = one_hot(labels);
    let x_val = x.select_rows(&val_idx);
    let y_val = y_all.select_rows(&val_idx);

    let mut current = model.clone();
    let mut params = current.params();
    let mut adam = Adam {
        m: vec![0.0; params.len()],
        v: vec![0.0; params.len()],
        t: 0,
    };
    let mut trace = TrainTrace {
        loss: Vec::new(),
        validation_loss: Vec::new(),
        best_validation_loss: None,
        best_epoch: None,
        stopped_epoch: 0,
        early_stopped: false,
        n_train: train_idx.len(),
        n_validation: val_idx.len(),
    };
    let mut best_params: Option<Vec<f64>> = None;
    let mut best_loss = f64::INFINITY;
    let mut stale = 0usize;
    let mut shuffled = train_idx.clone();

    for epoch in 0..config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64 + 1);
        shuffled.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in shuffled.chunks(config.batch_size) {
            let xb = x.select_rows(batch);
            let yb = y_all.select_rows(batch);
            let (loss, grad) = current.loss_and_gradient(&xb, &yb);
            total += loss * batch.len() as f64;
            adam.step(&mut params, &grad, config);
            current.set_params(&params);
        }
        let epoch_loss = total / shuffled.len() as f64;
        trace.loss.push(epoch_loss);
        trace.stopped_epoch = epoch + 1;
        if !epoch_loss.is_finite() || !params.iter().all(|p| p.is_finite()) {
            return Err(NeuralError::Diverged {
                epoch: epoch + 1,
                trace: Box::new(trace),
            });
        }
        if config.early_stopping {
            let val_loss = mlp_loss(&current, &x_val, &y_val)?;
            trace.validation_loss.push(val_loss);
            if val_loss < best_loss - config.tol {
                stale = 0;
            } else {
                stale += 1;
            }
            if val_loss < best_loss {
                best_loss = val_loss;
                best_params = Some(params.clone());
                trace.best_epoch = Some(epoch + 1);
                trace.best_validation_loss = Some(val_loss);
            }
            if stale >= config.patience {
                trace.early_stopped = true;
                break;
            }
        }
    }
    if let Some(best) = best_params {
        current.set_params(&best);
    }
    Ok((current, trace))
}
