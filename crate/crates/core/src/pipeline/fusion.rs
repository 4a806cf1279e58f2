//! The fusion head and joint training of the full hybrid model.
//!
//! Fusion input per day: `[arima_mean, garch_var, lstm_prediction, neg, neu,
//! pos, compound]`. The ARIMA mean passes through with unit weight; the head
//! learns a correction on the scaled-change axis,
//! `ŷ = arima_mean + s · (w·u + mlp(u))`, where `u` holds the inputs
//! re-expressed as scaled changes from the last close (ARIMA, LSTM) or
//! z-scores (variance, sentiment). Zero `w` and a zero output layer make the
//! head reproduce the ARIMA forecast exactly.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{Channels, FeatureRow, Standardizer};
use super::train::{backward_batch, batches, forward_batch, lstm_outputs, SequenceData};
use crate::document::Versioned;
use crate::error::{Error, Result};
use crate::neural::{clip_norm, Activation, AdamState, LstmRegressor, MlpHead};

pub const FUSION_INPUTS: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Learning rate for the LSTM while it is fine-tuned jointly.
    pub lstm_lr: f64,
    pub patience: usize,
    pub clip_norm: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            hidden_dim: 16,
            epochs: 30,
            batch_size: 32,
            lr: 0.005,
            lstm_lr: 0.001,
            patience: 5,
            clip_norm: 5.0,
        }
    }
}

/// One day's fusion inputs on the price scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionInput {
    pub arima_mean: f64,
    pub garch_var: f64,
    pub lstm_prediction: Option<f64>,
    pub sentiment: [f64; 4],
    pub last_price: f64,
}

impl FusionInput {
    pub fn from_row(row: &FeatureRow, lstm_prediction: Option<f64>) -> Self {
        FusionInput {
            arima_mean: row.arima_mean,
            garch_var: row.garch_var,
            lstm_prediction,
            sentiment: row.sentiment.to_array(),
            last_price: row.last_price(),
        }
    }

    /// `[arima_mean, garch_var, lstm_prediction, neg, neu, pos, compound]`,
    /// with the LSTM slot zero when absent.
    pub fn to_array(&self) -> [f64; FUSION_INPUTS] {
        let [n, u, p, c] = self.sentiment;
        [self.arima_mean, self.garch_var, self.lstm_prediction.unwrap_or(0.0), n, u, p, c]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionHead {
    pub with_lstm: bool,
    /// Price units per unit of scaled change.
    pub scale: f64,
    /// z-scoring of `[garch_var, neg, neu, pos, compound]`.
    pub context: Standardizer,
    pub linear: Vec<f64>,
    pub mlp: MlpHead,
}

pub struct FusionCache {
    u: Vec<f64>,
    mlp: crate::neural::MlpCache,
}

impl FusionHead {
    /// Identity-initialised head: predicts the ARIMA mean until trained.
    pub fn identity(
        with_lstm: bool,
        scale: f64,
        train_inputs: &[FusionInput],
        hidden_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        let ctx: Vec<Vec<f64>> = train_inputs
            .iter()
            .map(|x| {
                let mut v = vec![x.garch_var];
                v.extend_from_slice(&x.sentiment);
                v
            })
            .collect();
        let context = Standardizer::fit(&ctx)?;
        let dim = if with_lstm { FUSION_INPUTS } else { FUSION_INPUTS - 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mlp = MlpHead::new(&[dim, hidden_dim, 1], Activation::Tanh, &mut rng)?;
        let (w, b) = mlp.layer_range(1);
        mlp.params_mut()[w.start..b.end].iter_mut().for_each(|p| *p = 0.0);
        Ok(FusionHead {
            with_lstm,
            scale,
            context,
            linear: vec![0.0; dim],
            mlp,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.linear.len()
    }

    fn features(&self, x: &FusionInput) -> Result<Vec<f64>> {
        let mut u = vec![(x.arima_mean - x.last_price) / self.scale];
        let mut ctx = vec![x.garch_var];
        ctx.extend_from_slice(&x.sentiment);
        let z = self.context.apply(&ctx);
        u.push(z[0]);
        if self.with_lstm {
            let p = x
                .lstm_prediction
                .ok_or_else(|| Error::InvalidInput("fusion head expects an LSTM prediction".into()))?;
            u.push((p - x.last_price) / self.scale);
        }
        u.extend_from_slice(&z[1..]);
        Ok(u)
    }

    /// Correction on the scaled-change axis.
    fn correction(&self, x: &FusionInput) -> Result<(f64, FusionCache)> {
        let u = self.features(x)?;
        let (out, cache) = self.mlp.forward(&u)?;
        let f = out[0] + self.linear.iter().zip(&u).map(|(w, v)| w * v).sum::<f64>();
        Ok((f, FusionCache { u, mlp: cache }))
    }

    pub fn predict(&self, x: &FusionInput) -> Result<f64> {
        Ok(x.arima_mean + self.scale * self.correction(x)?.0)
    }

    /// Accumulates `∂L/∂linear` and `∂L/∂mlp` for `∂L/∂f = upstream`;
    /// returns `∂L/∂u`.
    fn backward(&self, cache: &FusionCache, upstream: f64, g_lin: &mut [f64], g_mlp: &mut [f64]) -> Result<Vec<f64>> {
        let mut du = self.mlp.backward(&cache.mlp, &[upstream], g_mlp)?;
        for ((g, d), (w, u)) in g_lin.iter_mut().zip(du.iter_mut()).zip(self.linear.iter().zip(&cache.u)) {
            *g += upstream * u;
            *d += upstream * w;
        }
        Ok(du)
    }
}

/// The trained hybrid: optional LSTM over feature windows plus fusion head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeslModel {
    pub channels: Channels,
    pub input_scaler: Option<Standardizer>,
    pub lstm: Option<LstmRegressor>,
    pub head: FusionHead,
}

impl Versioned for AgeslModel {
    const FORMAT: &'static str = "oilcast.agesl";
    const VERSION: u32 = 1;
}

pub struct FusionData<'a> {
    pub inputs: &'a [FusionInput],
    pub targets: &'a [f64],
    /// Present when the head consumes an LSTM; rows align with `inputs`.
    pub sequences: Option<&'a SequenceData>,
}

impl FusionData<'_> {
    fn scaled_residual(&self, head: &FusionHead, i: usize) -> f64 {
        (self.targets[i] - self.inputs[i].arima_mean) / head.scale
    }
}

/// Predictions of `model` for rows in `range`.
pub fn agesl_predictions(model: &AgeslModel, data: &FusionData<'_>, range: Range<usize>) -> Result<Vec<f64>> {
    let outs = match (&model.lstm, data.sequences) {
        (Some(m), Some(seq)) => Some(lstm_outputs(m, seq, range.clone())?),
        (None, _) => None,
        (Some(_), None) => return Err(Error::InvalidInput("LSTM model needs sequence data".into())),
    };
    range
        .enumerate()
        .map(|(k, i)| {
            let mut x = data.inputs[i];
            if let (Some(o), Some(seq)) = (&outs, data.sequences) {
                x.lstm_prediction = Some(seq.to_price(i, o[k]));
            }
            model.head.predict(&x)
        })
        .collect()
}

fn val_rmse(model: &AgeslModel, data: &FusionData<'_>, val: Range<usize>) -> Result<f64> {
    let p = agesl_predictions(model, data, val.clone())?;
    let n = val.len().max(1) as f64;
    Ok((val.zip(&p).map(|(i, q)| (data.targets[i] - q).powi(2)).sum::<f64>() / n).sqrt())
}

#[derive(Debug, Clone)]
pub struct FusionFit {
    pub model: AgeslModel,
    pub best_val_rmse: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Jointly trains the fusion head and, when present, the LSTM on `train`
/// with early stopping on validation RMSE. The untrained model counts as
/// epoch 0, so `epochs == 0` returns it unchanged.
pub fn fuse_and_train(
    mut model: AgeslModel,
    data: &FusionData<'_>,
    train: Range<usize>,
    val: Range<usize>,
    cfg: &FusionConfig,
    seed: u64,
) -> Result<FusionFit> {
    if data.inputs.len() != data.targets.len() {
        return Err(Error::DimensionMismatch {
            what: "fusion targets",
            expected: data.inputs.len(),
            got: data.targets.len(),
        });
    }
    if model.lstm.is_some() != model.head.with_lstm {
        return Err(Error::InvalidInput("fusion head and LSTM presence disagree".into()));
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::InsufficientData {
            what: "fusion training rows",
            needed: 1,
            got: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam_lin = AdamState::new(model.head.linear.len(), cfg.lr, 0.9, 0.999)?;
    let mut adam_mlp = AdamState::new(model.head.mlp.n_params(), cfg.lr, 0.9, 0.999)?;
    let mut adam_lstm = match &model.lstm {
        Some(m) => Some(AdamState::new(m.n_params(), cfg.lstm_lr, 0.9, 0.999)?),
        None => None,
    };
    let snapshot = |m: &AgeslModel| m.clone();
    let mut best = (val_rmse(&model, data, val.clone())?, 0, snapshot(&model));
    let mut epochs_run = 0;
    let lstm_slot = 2;
    for epoch in 1..=cfg.epochs {
        for b in batches(train.clone(), cfg.batch_size, &mut rng) {
            let n = b.len() as f64;
            let pass = match (&model.lstm, data.sequences) {
                (Some(m), Some(seq)) => Some(forward_batch(m, seq, b.clone())?),
                _ => None,
            };
            let mut g_lin = vec![0.0; model.head.linear.len()];
            let mut g_mlp = vec![0.0; model.head.mlp.n_params()];
            let mut up_lstm = vec![0.0; b.len()];
            for (k, i) in b.clone().enumerate() {
                let mut x = data.inputs[i];
                if let (Some(p), Some(seq)) = (&pass, data.sequences) {
                    x.lstm_prediction = Some(seq.to_price(i, p.outputs[k]));
                }
                let (f, cache) = model.head.correction(&x)?;
                let g = 2.0 * (f - data.scaled_residual(&model.head, i)) / n;
                let du = model.head.backward(&cache, g, &mut g_lin, &mut g_mlp)?;
                if pass.is_some() {
                    // u_lstm = (last + s_seq·o − last) / s_head
                    let seq = data.sequences.expect("checked");
                    up_lstm[k] = du[lstm_slot] * seq.scale / model.head.scale;
                }
            }
            clip_norm(&mut g_lin, cfg.clip_norm);
            clip_norm(&mut g_mlp, cfg.clip_norm);
            let diverged = |e: Error| Error::NonFinite(format!("fusion training diverged at epoch {epoch}: {e}"));
            adam_lin.step(&mut model.head.linear, &g_lin).map_err(diverged)?;
            adam_mlp.step(model.head.mlp.params_mut(), &g_mlp).map_err(diverged)?;
            if let (Some(p), Some(seq), Some(m), Some(adam)) = (&pass, data.sequences, model.lstm.as_mut(), adam_lstm.as_mut()) {
                let mut g = vec![0.0; m.n_params()];
                backward_batch(m, seq, b.clone(), p, &up_lstm, &mut g)?;
                clip_norm(&mut g, cfg.clip_norm);
                adam.step(m.params_mut(), &g).map_err(diverged)?;
            }
        }
        epochs_run = epoch;
        let v = val_rmse(&model, data, val.clone())?;
        log::debug!("fusion epoch {epoch}: val rmse {v:.5}");
        if v < best.0 {
            best = (v, epoch, snapshot(&model));
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }
    Ok(FusionFit {
        model: best.2,
        best_val_rmse: best.0,
        best_epoch: best.1,
        epochs_run,
    })
}

/// Builds the identity-initialised hybrid around an already trained LSTM
/// (or none), ready for [`fuse_and_train`].
pub fn init_agesl(
    lstm: Option<(LstmRegressor, Channels, Standardizer)>,
    scale: f64,
    train_inputs: &[FusionInput],
    cfg: &FusionConfig,
    seed: u64,
) -> Result<AgeslModel> {
    let with_lstm = lstm.is_some();
    let head = FusionHead::identity(with_lstm, scale, train_inputs, cfg.hidden_dim, seed)?;
    Ok(match lstm {
        Some((m, channels, scaler)) => AgeslModel {
            channels,
            input_scaler: Some(scaler),
            lstm: Some(m),
            head,
        },
        None => AgeslModel {
            channels: Channels::LAGS,
            input_scaler: None,
            lstm: None,
            head,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{finite_difference, relative_error};
    use rand::Rng;

    fn inputs(n: usize, seed: u64) -> (Vec<FusionInput>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let last = 60.0 + rng.random_range(-5.0..5.0);
            let c: f64 = rng.random_range(-0.8..0.8);
            let var: f64 = rng.random_range(0.5..2.0);
            let x = FusionInput {
                arima_mean: last + rng.random_range(-0.5..0.5),
                garch_var: var,
                lstm_prediction: Some(last + rng.random_range(-1.0..1.0)),
                sentiment: [c.min(0.0).abs() * 0.3, 0.7, c.max(0.0) * 0.3, c],
                last_price: last,
            };
            ys.push(x.arima_mean + 0.5 * c * var.sqrt() + 0.05 * rng.random_range(-1.0..1.0));
            xs.push(x);
        }
        (xs, ys)
    }

    #[test]
    fn identity_head_reproduces_arima() {
        let (xs, _) = inputs(50, 1);
        let head = FusionHead::identity(true, 1.3, &xs, 8, 2).unwrap();
        for x in &xs {
            assert_eq!(head.predict(x).unwrap(), x.arima_mean);
        }
    }

    #[test]
    fn head_gradient_matches_finite_differences() {
        let (xs, ys) = inputs(10, 3);
        let mut head = FusionHead::identity(true, 1.3, &xs, 5, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        head.mlp.params_mut().iter_mut().for_each(|p| *p = rng.random_range(-0.5..0.5));
        head.linear.iter_mut().for_each(|p| *p = rng.random_range(-0.5..0.5));
        let loss = |h: &FusionHead| -> f64 { xs.iter().zip(&ys).map(|(x, y)| (h.predict(x).unwrap() - y).powi(2)).sum() };
        let mut g_lin = vec![0.0; head.linear.len()];
        let mut g_mlp = vec![0.0; head.mlp.n_params()];
        for (x, y) in xs.iter().zip(&ys) {
            let (f, c) = head.correction(x).unwrap();
            let pred = x.arima_mean + head.scale * f;
            head.backward(&c, 2.0 * (pred - y) * head.scale, &mut g_lin, &mut g_mlp).unwrap();
        }
        let mut lin = head.linear.clone();
        let num_lin = finite_difference(&mut lin, 1e-6, |p| {
            let mut h = head.clone();
            h.linear.copy_from_slice(p);
            loss(&h)
        });
        let mut mp = head.mlp.params().to_vec();
        let num_mlp = finite_difference(&mut mp, 1e-6, |p| {
            let mut h = head.clone();
            h.mlp.params_mut().copy_from_slice(p);
            loss(&h)
        });
        assert!(relative_error(&g_lin, &num_lin) < 1e-6);
        assert!(relative_error(&g_mlp, &num_mlp) < 1e-6);
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let (xs, ys) = inputs(60, 6);
        let model = init_agesl(None, 1.0, &xs[..40], &FusionConfig::default(), 7).unwrap();
        let xs: Vec<FusionInput> = xs.into_iter().map(|x| FusionInput { lstm_prediction: None, ..x }).collect();
        let data = FusionData {
            inputs: &xs,
            targets: &ys,
            sequences: None,
        };
        let cfg = FusionConfig {
            epochs: 0,
            ..Default::default()
        };
        let fit = fuse_and_train(model.clone(), &data, 0..40, 40..60, &cfg, 1).unwrap();
        assert_eq!(fit.model, model);
    }

    #[test]
    fn learns_sentiment_volatility_term() {
        let (xs, ys) = inputs(600, 8);
        let xs: Vec<FusionInput> = xs.into_iter().map(|x| FusionInput { lstm_prediction: None, ..x }).collect();
        let model = init_agesl(None, 0.5, &xs[..500], &FusionConfig::default(), 9).unwrap();
        let data = FusionData {
            inputs: &xs,
            targets: &ys,
            sequences: None,
        };
        let base = val_rmse(&model, &data, 500..600).unwrap();
        let fit = fuse_and_train(model, &data, 0..500, 500..600, &FusionConfig::default(), 2).unwrap();
        assert!(fit.best_val_rmse < 0.5 * base, "{} vs {base}", fit.best_val_rmse);
    }
}
