//! LSTM training on windows of consecutive feature rows.
//!
//! Mini-batches are runs of consecutive target days, so the windows in a
//! batch overlap and each day's input projection `W·x` is computed and
//! back-propagated once per batch.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{clip_norm, AdamState, LstmCache, LstmRegressor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmTrainConfig {
    pub hidden_dim: usize,
    /// Rows per unrolled window.
    pub seq_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub clip_norm: f64,
}

impl Default for LstmTrainConfig {
    fn default() -> Self {
        LstmTrainConfig {
            hidden_dim: 64,
            seq_len: 20,
            epochs: 30,
            batch_size: 32,
            lr: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            patience: 5,
            clip_norm: 5.0,
        }
    }
}

/// Standardized inputs and next-close targets, one entry per feature row.
/// The network predicts the scaled change `(y − last) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub last: Vec<f64>,
    pub scale: f64,
    pub seq_len: usize,
}

impl SequenceData {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>, last: Vec<f64>, scale: f64, seq_len: usize) -> Result<Self> {
        if inputs.len() != targets.len() || last.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                what: "sequence data",
                expected: targets.len(),
                got: inputs.len().min(last.len()),
            });
        }
        if !(scale > 0.0 && scale.is_finite()) || seq_len == 0 {
            return Err(Error::OutOfRange(format!(
                "scale must be positive and seq_len nonzero (scale {scale}, seq_len {seq_len})"
            )));
        }
        Ok(SequenceData {
            inputs,
            targets,
            last,
            scale,
            seq_len,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Rows feeding the prediction for row `i`; shorter at the start.
    pub fn window(&self, i: usize) -> Range<usize> {
        (i + 1).saturating_sub(self.seq_len)..i + 1
    }

    pub fn scaled_target(&self, i: usize) -> f64 {
        (self.targets[i] - self.last[i]) / self.scale
    }

    pub fn to_price(&self, i: usize, out: f64) -> f64 {
        self.last[i] + self.scale * out
    }
}

/// Forward state for a run of consecutive targets.
pub(crate) struct BatchPass {
    first: usize,
    pub outputs: Vec<f64>,
    caches: Vec<LstmCache>,
}

pub(crate) fn forward_batch(model: &LstmRegressor, data: &SequenceData, range: Range<usize>) -> Result<BatchPass> {
    let first = data.window(range.start).start;
    let width = 4 * model.hidden_dim();
    let proj: Vec<Vec<f64>> = (first..range.end)
        .map(|d| {
            let mut p = vec![0.0; width];
            model.project(&data.inputs[d], &mut p);
            p
        })
        .collect();
    let mut outputs = Vec::with_capacity(range.len());
    let mut caches = Vec::with_capacity(range.len());
    for i in range {
        let w = data.window(i);
        let (y, cache) = model.forward_projected(&proj[w.start - first..w.end - first])?;
        outputs.push(y);
        caches.push(cache);
    }
    Ok(BatchPass { first, outputs, caches })
}

pub(crate) fn backward_batch(
    model: &LstmRegressor,
    data: &SequenceData,
    range: Range<usize>,
    pass: &BatchPass,
    upstream: &[f64],
    grads: &mut [f64],
) -> Result<()> {
    let width = 4 * model.hidden_dim();
    let mut dproj = vec![vec![0.0; width]; range.end - pass.first];
    for (k, i) in range.clone().enumerate() {
        if upstream[k] == 0.0 {
            continue;
        }
        let dpre = model.backward_projected(&pass.caches[k], upstream[k], grads)?;
        let start = data.window(i).start - pass.first;
        for (s, dp) in dpre.iter().enumerate() {
            for (acc, v) in dproj[start + s].iter_mut().zip(dp) {
                *acc += v;
            }
        }
    }
    for (j, dp) in dproj.iter().enumerate() {
        model.accumulate_input_grad(dp, &data.inputs[pass.first + j], grads);
    }
    Ok(())
}

/// Raw network outputs for every row in `range`.
pub fn lstm_outputs(model: &LstmRegressor, data: &SequenceData, range: Range<usize>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(range.len());
    let mut s = range.start;
    while s < range.end {
        let e = (s + 256).min(range.end);
        out.extend(forward_batch(model, data, s..e)?.outputs);
        s = e;
    }
    Ok(out)
}

/// Price-scale predictions for every row in `range`.
pub fn lstm_predictions(model: &LstmRegressor, data: &SequenceData, range: Range<usize>) -> Result<Vec<f64>> {
    let outs = lstm_outputs(model, data, range.clone())?;
    Ok(range.zip(outs).map(|(i, o)| data.to_price(i, o)).collect())
}

pub(crate) fn rmse_on(pred: &[f64], data: &SequenceData, range: Range<usize>) -> f64 {
    let n = range.len().max(1) as f64;
    (range.zip(pred).map(|(i, p)| (data.targets[i] - p).powi(2)).sum::<f64>() / n).sqrt()
}

/// Consecutive batches of `range`, in shuffled order.
pub(crate) fn batches(range: Range<usize>, size: usize, rng: &mut ChaCha8Rng) -> Vec<Range<usize>> {
    let size = size.max(1);
    let mut out: Vec<Range<usize>> = (range.start..range.end)
        .step_by(size)
        .map(|s| s..(s + size).min(range.end))
        .collect();
    out.shuffle(rng);
    out
}

#[derive(Debug, Clone)]
pub struct LstmFit {
    pub model: LstmRegressor,
    pub best_val_rmse: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_loss: Vec<f64>,
}

/// Trains on `train`, keeps the parameters with the lowest validation RMSE.
pub fn train_lstm(
    data: &SequenceData,
    train: Range<usize>,
    val: Range<usize>,
    cfg: &LstmTrainConfig,
    seed: u64,
) -> Result<LstmFit> {
    if train.is_empty() || val.is_empty() || val.end > data.len() {
        return Err(Error::InsufficientData {
            what: "LSTM training rows",
            needed: 1,
            got: train.len().min(val.len()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = data.inputs[0].len();
    let mut model = LstmRegressor::new(dim, cfg.hidden_dim, &mut rng);
    let mut adam = AdamState::new(model.n_params(), cfg.lr, cfg.beta1, cfg.beta2)?;
    let val_rmse = |m: &LstmRegressor| -> Result<f64> {
        let p = lstm_predictions(m, data, val.clone())?;
        Ok(rmse_on(&p, data, val.clone()))
    };
    let mut best = (val_rmse(&model)?, 0, model.params().to_vec());
    let mut train_loss = Vec::new();
    let mut epochs_run = 0;
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for b in batches(train.clone(), cfg.batch_size, &mut rng) {
            let pass = forward_batch(&model, data, b.clone())?;
            let n = b.len() as f64;
            let upstream: Vec<f64> = b
                .clone()
                .zip(&pass.outputs)
                .map(|(i, o)| {
                    let e = o - data.scaled_target(i);
                    total += e * e;
                    2.0 * e / n
                })
                .collect();
            let mut grads = vec![0.0; model.n_params()];
            backward_batch(&model, data, b, &pass, &upstream, &mut grads)?;
            clip_norm(&mut grads, cfg.clip_norm);
            adam.step(model.params_mut(), &grads).map_err(|e| {
                Error::NonFinite(format!("LSTM training diverged at epoch {epoch}: {e}"))
            })?;
        }
        epochs_run = epoch;
        train_loss.push(total / train.len() as f64);
        let v = val_rmse(&model)?;
        log::debug!("lstm epoch {epoch}: train mse {:.5} val rmse {v:.5}", train_loss[epoch - 1]);
        if v < best.0 {
            best = (v, epoch, model.params().to_vec());
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }
    model.params_mut().copy_from_slice(&best.2);
    Ok(LstmFit {
        model,
        best_val_rmse: best.0,
        best_epoch: best.1,
        epochs_run,
        train_loss,
    })
}
