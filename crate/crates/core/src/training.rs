//! Mini-batch training loop with MSE loss, per-epoch validation tracking,
//! and RMSE evaluation.
//!
//! The loop is fully deterministic: examples are shuffled by a seeded
//! Fisher-Yates per epoch, batches are visited in order, gradients are
//! accumulated example by example in index order, and the optimizer state
//! advances one step per batch. The final partial batch is kept and enters
//! the loss mean with its true size.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::dataset::DatasetSplit;
use crate::nn::{
    forward_cached, init_parameters, model_backward, ArchitectureConfig, InputNorm,
    ModelCheckpoint, ModelParams, NnError,
};
use crate::rng::SeededRng;
use crate::types::{AccelerationVector, LabeledExample};

/// Any parameter beyond this magnitude counts as divergence.
const PARAM_DIVERGENCE_CAP: f64 = 1e100;

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("prediction and target batches have different sizes ({pred} vs {target})")]
    BatchSizeMismatch { pred: usize, target: usize },
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("batch size must be positive")]
    ZeroBatchSize,
    #[error("example {index} has window length {got}, expected {expected}")]
    InconsistentWindow {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("validation loss is non-finite at epoch {epoch}")]
    DivergedValidation { epoch: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Optimizer selection. Adam is the default; plain SGD is kept for
/// ablation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub fn adam_default() -> Self {
        Self::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub shuffle_seed: u64,
    pub init_seed: u64,
    /// Fit a per-axis affine standardization of the inputs on the training
    /// split and store it in the checkpoint. Off by default: raw m/s values
    /// feed the conv layer.
    pub normalize_input: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.001,
            optimizer: Optimizer::adam_default(),
            shuffle_seed: 0,
            init_seed: 0,
            normalize_input: false,
        }
    }
}

/// Per-epoch training and validation loss. The validation series is empty
/// when no validation set was provided, otherwise it has one entry per
/// epoch like the training series.
#[derive(Debug, Clone, PartialEq)]
pub struct LossHistory {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
}

impl LossHistory {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for (i, train) in self.train.iter().enumerate() {
            match self.validation.get(i) {
                Some(val) => {
                    let _ = writeln!(out, "{},{train},{val}", i + 1);
                }
                None => {
                    let _ = writeln!(out, "{},{train},", i + 1);
                }
            }
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        if lines.next()?.trim() != "epoch,train_loss,val_loss" {
            return None;
        }
        let mut train = Vec::new();
        let mut validation = Vec::new();
        for line in lines {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return None;
            }
            train.push(fields[1].parse().ok()?);
            if !fields[2].is_empty() {
                validation.push(fields[2].parse().ok()?);
            }
        }
        Some(Self { train, validation })
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv_string())
    }
}

/// Mean over the batch of the squared 3-axis residual norm:
/// `(1/n) Σ ‖y_i − ŷ_i‖²`.
pub fn mse_loss(
    pred: &[AccelerationVector],
    target: &[AccelerationVector],
) -> Result<f64, TrainingError> {
    if pred.len() != target.len() {
        return Err(TrainingError::BatchSizeMismatch {
            pred: pred.len(),
            target: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(TrainingError::EmptyBatch);
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| squared_residual_norm(p, t))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Root of [`mse_loss`], in m/s².
pub fn rmse(
    pred: &[AccelerationVector],
    target: &[AccelerationVector],
) -> Result<f64, TrainingError> {
    Ok(mse_loss(pred, target)?.sqrt())
}

fn squared_residual_norm(pred: &AccelerationVector, target: &AccelerationVector) -> f64 {
    (0..3).map(|k| (pred.a[k] - target.a[k]).powi(2)).sum()
}

/// Mean squared residual norm of the model over a fixed example list, with
/// parameters frozen. Evaluation order is the list order, so repeated calls
/// return bit-identical values.
pub fn evaluate_mse(
    checkpoint: &ModelCheckpoint,
    examples: &[LabeledExample],
) -> Result<f64, TrainingError> {
    if examples.is_empty() {
        return Err(TrainingError::EmptyBatch);
    }
    let mut sum = 0.0;
    for example in examples {
        let (pred, _) = forward_cached(&example.window, checkpoint)?;
        sum += squared_residual_norm(&pred, &example.target);
    }
    Ok(sum / examples.len() as f64)
}

struct AdamState {
    m: ModelParams,
    v: ModelParams,
    step: u64,
}

enum OptimizerState {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        state: AdamState,
    },
}

impl OptimizerState {
    fn new(optimizer: Optimizer, arch: &ArchitectureConfig) -> Self {
        match optimizer {
            Optimizer::Sgd => Self::Sgd,
            Optimizer::Adam {
                beta1,
                beta2,
                epsilon,
            } => Self::Adam {
                beta1,
                beta2,
                epsilon,
                state: AdamState {
                    m: ModelParams::zeros(arch),
                    v: ModelParams::zeros(arch),
                    step: 0,
                },
            },
        }
    }

    fn apply(&mut self, params: &mut ModelParams, grads: &ModelParams, lr: f64) {
        match self {
            Self::Sgd => {
                for (p, g) in params.arrays_mut().into_iter().zip(grads.arrays()) {
                    for (pv, gv) in p.iter_mut().zip(g) {
                        *pv -= lr * gv;
                    }
                }
            }
            Self::Adam {
                beta1,
                beta2,
                epsilon,
                state,
            } => {
                state.step += 1;
                let bias1 = 1.0 - beta1.powi(state.step as i32);
                let bias2 = 1.0 - beta2.powi(state.step as i32);
                let m_arrays = state.m.arrays_mut();
                let v_arrays = state.v.arrays_mut();
                for (((p, g), m), v) in params
                    .arrays_mut()
                    .into_iter()
                    .zip(grads.arrays())
                    .zip(m_arrays)
                    .zip(v_arrays)
                {
                    for (((pv, gv), mv), vv) in
                        p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        *mv = *beta1 * *mv + (1.0 - *beta1) * gv;
                        *vv = *beta2 * *vv + (1.0 - *beta2) * gv * gv;
                        let m_hat = *mv / bias1;
                        let v_hat = *vv / bias2;
                        *pv -= lr * m_hat / (v_hat.sqrt() + *epsilon);
                    }
                }
            }
        }
    }
}

fn fit_input_norm(examples: &[LabeledExample]) -> InputNorm {
    let mut count = 0u64;
    let mut sum = [0.0f64; 3];
    let mut sum_sq = [0.0f64; 3];
    for example in examples {
        for sample in example.window.samples() {
            for axis in 0..3 {
                sum[axis] += sample.v[axis];
                sum_sq[axis] += sample.v[axis] * sample.v[axis];
            }
        }
        count += example.window.len() as u64;
    }
    let n = count as f64;
    let mean = [0, 1, 2].map(|k| sum[k] / n);
    let std = [0, 1, 2].map(|k| {
        let var = (sum_sq[k] / n - mean[k] * mean[k]).max(0.0);
        var.sqrt().max(1e-9)
    });
    InputNorm { mean, std }
}

/// Trains a fresh model on the split: per epoch, a seeded shuffle, batches
/// of `batch_size` (final partial batch kept), forward/backward/step per
/// batch, and a frozen-parameter validation pass. Returns the final-epoch
/// checkpoint and the full loss history. Epoch training loss is the
/// example-weighted mean over batches. Aborts with the offending
/// epoch/batch when the loss goes non-finite.
pub fn train(
    split: &DatasetSplit,
    arch: &ArchitectureConfig,
    cfg: &TrainConfig,
) -> Result<(ModelCheckpoint, LossHistory), TrainingError> {
    if split.train.is_empty() {
        return Err(TrainingError::EmptyTrainSet);
    }
    if cfg.batch_size == 0 {
        return Err(TrainingError::ZeroBatchSize);
    }
    let window_len = split.train[0].window.len();
    for (index, example) in split.train.iter().chain(&split.validation).enumerate() {
        if example.window.len() != window_len {
            return Err(TrainingError::InconsistentWindow {
                index,
                got: example.window.len(),
                expected: window_len,
            });
        }
    }

    let mut checkpoint = init_parameters(arch, window_len, cfg.init_seed)?;
    if cfg.normalize_input {
        checkpoint.input_norm = Some(fit_input_norm(&split.train));
    }
    let mut optimizer = OptimizerState::new(cfg.optimizer, arch);
    let mut shuffle_rng = SeededRng::new(cfg.shuffle_seed);
    let mut indices: Vec<usize> = (0..split.train.len()).collect();
    let mut history = LossHistory {
        train: Vec::with_capacity(cfg.epochs),
        validation: Vec::with_capacity(if split.validation.is_empty() {
            0
        } else {
            cfg.epochs
        }),
    };

    for epoch in 1..=cfg.epochs {
        shuffle_rng.shuffle(&mut indices);
        let mut epoch_sq_sum = 0.0;
        for (batch_idx, chunk) in indices.chunks(cfg.batch_size).enumerate() {
            let mut grads = ModelParams::zeros(arch);
            let mut batch_sq_sum = 0.0;
            for &i in chunk {
                let example = &split.train[i];
                let (pred, cache) = forward_cached(&example.window, &checkpoint)?;
                batch_sq_sum += squared_residual_norm(&pred, &example.target);
                let g = model_backward(&checkpoint, &cache, &example.target)?;
                grads.add_scaled(&g, 1.0);
            }
            let batch_loss = batch_sq_sum / chunk.len() as f64;
            if !batch_loss.is_finite() {
                return Err(TrainingError::Diverged {
                    epoch,
                    batch: batch_idx + 1,
                });
            }
            grads.scale(1.0 / chunk.len() as f64);
            optimizer.apply(&mut checkpoint.params, &grads, cfg.learning_rate);
            // Parameters below the cap cannot overflow a forward pass (all
            // intermediate products stay far under f64::MAX), so divergence
            // always surfaces here or in a loss value, never as a panic.
            if !checkpoint.params.all_finite() || checkpoint.params.max_abs() > PARAM_DIVERGENCE_CAP
            {
                return Err(TrainingError::Diverged {
                    epoch,
                    batch: batch_idx + 1,
                });
            }
            epoch_sq_sum += batch_sq_sum;
        }
        history.train.push(epoch_sq_sum / split.train.len() as f64);

        if !split.validation.is_empty() {
            let val = evaluate_mse(&checkpoint, &split.validation)?;
            if !val.is_finite() {
                return Err(TrainingError::DivergedValidation { epoch });
            }
            history.validation.push(val);
        }
    }

    Ok((checkpoint, history))
}
