//! Latent event-type model trained by neural variational inference.
//!
//! Generative story for one cluster:
//!
//! * `t ~ N(0, I)` (100-d event type)
//! * for each entity: slot `s ~ Cat(softmax(W t + b))`, head `h ~ Cat(λ_s)`,
//!   features `f ~ N(β_s, diag)`, redundancy `r ~ N(γ_s)`
//!
//! The inference network maps the cluster's mean entity features and mean
//! redundancy to `q(t) = N(μ, diag σ²)`. Slots are summed out exactly, so the
//! only sampled quantity is `t` (reparameterised). Features are standardised
//! with training-corpus statistics before entering the model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ClusterItem, Entity, EventTypeVector, NewsCluster, Sentence, Token, TYPE_DIM};
use crate::document::Versioned;
use crate::error::{Error, Result};
use crate::neural::{Activation, AdamState, MlpHead};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const UNK: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OdeeConfig {
    pub k: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Clusters per gradient step.
    pub batch_size: usize,
    pub hidden_dim: usize,
    /// Monte Carlo samples per cluster for the per-epoch ELBO.
    pub eval_samples: usize,
    pub seed: u64,
}

impl Default for OdeeConfig {
    fn default() -> Self {
        OdeeConfig {
            k: 10,
            epochs: 50,
            lr: 0.005,
            beta1: 0.8,
            beta2: 0.999,
            batch_size: 8,
            hidden_dim: 32,
            eval_samples: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeeParams {
    pub k: usize,
    pub feat_dim: usize,
    /// Head-word vocabulary; index 0 is the OOV bucket, the rest sorted.
    pub vocab: Vec<String>,
    /// Prior variance of each type component.
    pub prior_var: f64,
    /// Slot-prior weights `W` (K×T) and bias (K).
    pub theta_w: Vec<f64>,
    pub theta_b: Vec<f64>,
    /// Head-word logits per slot (K×V).
    pub lambda: Vec<f64>,
    /// Feature means and log-variances per slot (K×F).
    pub beta_mean: Vec<f64>,
    pub beta_logvar: Vec<f64>,
    /// Redundancy mean and log-variance per slot.
    pub gamma_mean: Vec<f64>,
    pub gamma_logvar: Vec<f64>,
    pub feat_mean: Vec<f64>,
    pub feat_scale: Vec<f64>,
    /// Inference network `[mean features, mean r] → [μ, log σ²]`.
    pub encoder: MlpHead,
}

impl Versioned for OdeeParams {
    const FORMAT: &'static str = "oilcast.odee";
    const VERSION: u32 = 1;
}

/// Per-epoch training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// ELBO per entity after each epoch (fixed evaluation noise).
    pub elbo: Vec<f64>,
}

impl TrainReport {
    /// Means over consecutive blocks of `window` epochs.
    pub fn smoothed(&self, window: usize) -> Vec<f64> {
        self.elbo
            .chunks(window.max(1))
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub slots: Vec<usize>,
    /// Posterior probability of the chosen slot.
    pub probs: Vec<f64>,
}

/// Log-space argmax of `prior·head·feature` per slot. Zero factors give `−∞`;
/// ties go to the lower index.
pub fn argmax_from_factors(prior: &[f64], head: &[f64], feature: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for s in 0..prior.len() {
        let v = prior[s].ln() + head[s].ln() + feature[s].ln();
        if v > best.1 {
            best = (s, v);
        }
    }
    best.0
}

fn log_softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

fn log_normal(x: f64, mean: f64, logvar: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + logvar + d * d * (-logvar).exp())
}

struct Prepared {
    x: Vec<Vec<f64>>,
    r: Vec<f64>,
    h: Vec<usize>,
    enc_in: Vec<f64>,
}

const W: usize = 0;
const B: usize = 1;
const LAM: usize = 2;
const BM: usize = 3;
const BLV: usize = 4;
const GM: usize = 5;
const GLV: usize = 6;
const ENC: usize = 7;

impl OdeeParams {
    pub fn vocab_index(&self, word: &str) -> usize {
        match self.vocab[1..].binary_search_by(|w| w.as_str().cmp(word)) {
            Ok(i) => i + 1,
            Err(_) => 0,
        }
    }

    fn v(&self) -> usize {
        self.vocab.len()
    }

    fn prepare(&self, c: &NewsCluster) -> Result<Prepared> {
        let f = self.feat_dim;
        let mut x = Vec::with_capacity(c.entities.len());
        let mut enc_in = vec![0.0; f + 1];
        for e in &c.entities {
            if e.features.len() != f {
                return Err(Error::DimensionMismatch {
                    what: "entity features",
                    expected: f,
                    got: e.features.len(),
                });
            }
            let z: Vec<f64> = (0..f)
                .map(|d| (e.features[d] - self.feat_mean[d]) / self.feat_scale[d])
                .collect();
            for d in 0..f {
                enc_in[d] += z[d];
            }
            enc_in[f] += e.redundancy;
            x.push(z);
        }
        if !c.entities.is_empty() {
            let n = c.entities.len() as f64;
            enc_in.iter_mut().for_each(|v| *v /= n);
        }
        Ok(Prepared {
            x,
            r: c.entities.iter().map(|e| e.redundancy).collect(),
            h: c.entities.iter().map(|e| self.vocab_index(&e.head)).collect(),
            enc_in,
        })
    }

    fn log_lambda(&self) -> Vec<Vec<f64>> {
        let v = self.v();
        (0..self.k).map(|s| log_softmax(&self.lambda[s * v..(s + 1) * v])).collect()
    }

    fn slot_logits(&self, t: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|s| {
                self.theta_b[s]
                    + self.theta_w[s * TYPE_DIM..(s + 1) * TYPE_DIM]
                        .iter()
                        .zip(t)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect()
    }

    /// `log p_λ(h|s) + log p_β(f|s)` and optionally `log p_γ(r|s)`.
    fn emissions(&self, p: &Prepared, log_lam: &[Vec<f64>], with_r: bool) -> Vec<Vec<f64>> {
        let f = self.feat_dim;
        (0..p.x.len())
            .map(|e| {
                (0..self.k)
                    .map(|s| {
                        let mut v = log_lam[s][p.h[e]];
                        for d in 0..f {
                            v += log_normal(p.x[e][d], self.beta_mean[s * f + d], self.beta_logvar[s * f + d]);
                        }
                        if with_r {
                            v += log_normal(p.r[e], self.gamma_mean[s], self.gamma_logvar[s]);
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    /// Posterior mean of the type vector.
    pub fn infer_type(&self, cluster: &NewsCluster) -> Result<EventTypeVector> {
        let p = self.prepare(cluster)?;
        let out = self.encoder.forward(&p.enc_in)?.0;
        EventTypeVector::new(out[..TYPE_DIM].to_vec())
    }

    /// Slot per entity by `argmax_s p_θ(s|t)·p_λ(h|s)·p_β(f|s)`, in log space.
    pub fn assign_slots(&self, cluster: &NewsCluster, t: &EventTypeVector) -> Result<SlotAssignment> {
        let p = self.prepare(cluster)?;
        let log_prior = log_softmax(&self.slot_logits(t.as_slice()));
        let em = self.emissions(&p, &self.log_lambda(), false);
        let mut slots = Vec::with_capacity(em.len());
        let mut probs = Vec::with_capacity(em.len());
        for row in em {
            let scores: Vec<f64> = row.iter().zip(&log_prior).map(|(a, b)| a + b).collect();
            let post = log_softmax(&scores);
            let (best, lp) = post
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (s, v)| if *v > acc.1 { (s, *v) } else { acc });
            slots.push(best);
            probs.push(lp.exp());
        }
        Ok(SlotAssignment { slots, probs })
    }

    fn sample_elbo(&self, p: &Prepared, em: &[Vec<f64>], eps: &[f64], grads: Option<&mut [Vec<f64>; 8]>) -> Result<f64> {
        let (enc_out, enc_cache) = self.encoder.forward(&p.enc_in)?;
        let (mu, lv) = enc_out.split_at(TYPE_DIM);
        let sd: Vec<f64> = lv.iter().map(|v| (0.5 * v).exp()).collect();
        let t: Vec<f64> = (0..TYPE_DIM).map(|i| mu[i] + sd[i] * eps[i]).collect();
        let log_pi = log_softmax(&self.slot_logits(&t));
        let pv = self.prior_var;
        let kl: f64 = (0..TYPE_DIM)
            .map(|i| 0.5 * ((mu[i] * mu[i] + sd[i] * sd[i]) / pv - 1.0 - lv[i] + pv.ln()))
            .sum();

        let mut ll = 0.0;
        let mut resp = Vec::with_capacity(em.len());
        for row in em {
            let scores: Vec<f64> = row.iter().zip(&log_pi).map(|(a, b)| a + b).collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|v| (v - m).exp()).sum();
            ll += m + z.ln();
            resp.push(scores.iter().map(|v| (v - m).exp() / z).collect::<Vec<f64>>());
        }
        let elbo = ll - kl;

        let Some(g) = grads else {
            return Ok(elbo);
        };
        // Gradients below are of −ELBO.
        let (k, f, v) = (self.k, self.feat_dim, self.v());
        let pi: Vec<f64> = log_pi.iter().map(|x| x.exp()).collect();
        let mut dlogit = vec![0.0; k];
        let mut counts = vec![0.0; k * v];
        let mut mass = vec![0.0; k];
        for (e, gam) in resp.iter().enumerate() {
            for s in 0..k {
                let w = gam[s];
                dlogit[s] += w - pi[s];
                if w == 0.0 {
                    continue;
                }
                counts[s * v + p.h[e]] += w;
                mass[s] += w;
                for d in 0..f {
                    let i = s * f + d;
                    let var = self.beta_logvar[i].exp();
                    let diff = p.x[e][d] - self.beta_mean[i];
                    g[BM][i] -= w * diff / var;
                    g[BLV][i] -= w * 0.5 * (diff * diff / var - 1.0);
                }
                let var = self.gamma_logvar[s].exp();
                let diff = p.r[e] - self.gamma_mean[s];
                g[GM][s] -= w * diff / var;
                g[GLV][s] -= w * 0.5 * (diff * diff / var - 1.0);
            }
        }
        for s in 0..k {
            let lam = log_softmax(&self.lambda[s * v..(s + 1) * v]);
            for (j, l) in lam.iter().enumerate() {
                g[LAM][s * v + j] -= counts[s * v + j] - mass[s] * l.exp();
            }
        }
        let mut dt = vec![0.0; TYPE_DIM];
        for s in 0..k {
            g[B][s] -= dlogit[s];
            let row = s * TYPE_DIM;
            for i in 0..TYPE_DIM {
                g[W][row + i] -= dlogit[s] * t[i];
                dt[i] += dlogit[s] * self.theta_w[row + i];
            }
        }
        let mut upstream = vec![0.0; 2 * TYPE_DIM];
        for i in 0..TYPE_DIM {
            let dmu = dt[i] - mu[i] / pv;
            let dlv = dt[i] * eps[i] * 0.5 * sd[i] - 0.5 * (sd[i] * sd[i] / pv - 1.0);
            upstream[i] = -dmu;
            upstream[TYPE_DIM + i] = -dlv;
        }
        self.encoder.backward(&enc_cache, &upstream, &mut g[ENC])?;
        Ok(elbo)
    }

    /// Monte Carlo ELBO per entity with noise drawn from `seed`.
    pub fn elbo(&self, clusters: &[NewsCluster], samples: usize, seed: u64) -> Result<f64> {
        let log_lam = self.log_lambda();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut total = 0.0;
        let mut n = 0usize;
        let samples = samples.max(1);
        for c in clusters {
            let p = self.prepare(c)?;
            let em = self.emissions(&p, &log_lam, true);
            for _ in 0..samples {
                let eps: Vec<f64> = (0..TYPE_DIM).map(|_| StandardNormal.sample(&mut rng)).collect();
                total += self.sample_elbo(&p, &em, &eps, None)? / samples as f64;
            }
            n += c.entities.len();
        }
        Ok(total / n.max(1) as f64)
    }

    fn zero_grads(&self) -> [Vec<f64>; 8] {
        [
            vec![0.0; self.theta_w.len()],
            vec![0.0; self.theta_b.len()],
            vec![0.0; self.lambda.len()],
            vec![0.0; self.beta_mean.len()],
            vec![0.0; self.beta_logvar.len()],
            vec![0.0; self.gamma_mean.len()],
            vec![0.0; self.gamma_logvar.len()],
            vec![0.0; self.encoder.n_params()],
        ]
    }

    fn block_mut(&mut self, b: usize) -> &mut [f64] {
        match b {
            W => &mut self.theta_w,
            B => &mut self.theta_b,
            LAM => &mut self.lambda,
            BM => &mut self.beta_mean,
            BLV => &mut self.beta_logvar,
            GM => &mut self.gamma_mean,
            GLV => &mut self.gamma_logvar,
            _ => self.encoder.params_mut(),
        }
    }

    fn init(corpus: &[NewsCluster], cfg: &OdeeConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let entities: Vec<&Entity> = corpus.iter().flat_map(|c| &c.entities).collect();
        let f = entities[0].features.len();
        let n = entities.len() as f64;
        let mut feat_mean = vec![0.0; f];
        for e in &entities {
            if e.features.len() != f {
                return Err(Error::DimensionMismatch {
                    what: "entity features",
                    expected: f,
                    got: e.features.len(),
                });
            }
            for d in 0..f {
                feat_mean[d] += e.features[d] / n;
            }
        }
        let mut feat_scale = vec![0.0; f];
        for e in &entities {
            for d in 0..f {
                feat_scale[d] += (e.features[d] - feat_mean[d]).powi(2) / n;
            }
        }
        for s in &mut feat_scale {
            *s = if *s > 1e-12 { s.sqrt() } else { 1.0 };
        }
        let mut vocab: Vec<String> = entities.iter().map(|e| e.head.clone()).collect();
        vocab.sort();
        vocab.dedup();
        vocab.retain(|w| w != UNK);
        vocab.insert(0, UNK.to_string());

        let z: Vec<Vec<f64>> = entities
            .iter()
            .map(|e| (0..f).map(|d| (e.features[d] - feat_mean[d]) / feat_scale[d]).collect())
            .collect();
        let k = cfg.k;
        let (centres, labels) = kmeans(&z, k, 4, 25, rng);
        let beta_mean: Vec<f64> = centres.concat();
        let mut beta_logvar = vec![0.0f64; k * f];
        let mut sizes = vec![0.0f64; k];
        for (x, &l) in z.iter().zip(&labels) {
            sizes[l] += 1.0;
            for d in 0..f {
                beta_logvar[l * f + d] += (x[d] - centres[l][d]).powi(2);
            }
        }
        for s in 0..k {
            for d in 0..f {
                let i = s * f + d;
                beta_logvar[i] = (beta_logvar[i] / sizes[s].max(1.0)).max(0.05).ln();
            }
        }
        let r_mean = entities.iter().map(|e| e.redundancy).sum::<f64>() / n;
        let r_var = entities.iter().map(|e| (e.redundancy - r_mean).powi(2)).sum::<f64>() / n;
        let mut encoder = MlpHead::new(&[f + 1, cfg.hidden_dim, 2 * TYPE_DIM], Activation::Tanh, rng)?;
        let (w_last, _) = encoder.layer_range(1);
        encoder.params_mut()[w_last].iter_mut().for_each(|w| *w *= 0.1);
        let v = vocab.len();
        // Head-word logits start at the smoothed log-frequencies within each
        // initial cluster.
        let mut lambda = vec![1.0f64; k * v];
        for (e, &l) in entities.iter().zip(&labels) {
            let j = match vocab[1..].binary_search(&e.head) {
                Ok(i) => i + 1,
                Err(_) => 0,
            };
            lambda[l * v + j] += 1.0;
        }
        lambda.iter_mut().for_each(|x| *x = x.ln());
        Ok(OdeeParams {
            k,
            feat_dim: f,
            vocab,
            prior_var: 1.0,
            theta_w: (0..k * TYPE_DIM).map(|_| rng.random_range(-0.01..0.01)).collect(),
            theta_b: vec![0.0; k],
            lambda,
            beta_logvar,
            beta_mean,
            gamma_mean: vec![r_mean; k],
            gamma_logvar: vec![r_var.max(1e-3).ln(); k],
            feat_mean,
            feat_scale,
            encoder,
        })
    }

    /// Trains on a corpus by stochastic variational inference with ADAM.
    pub fn train(corpus: &[NewsCluster], cfg: &OdeeConfig) -> Result<(Self, TrainReport)> {
        if corpus.is_empty() {
            return Err(Error::InsufficientData {
                what: "event model corpus",
                needed: 1,
                got: 0,
            });
        }
        let n_entities: usize = corpus.iter().map(|c| c.entities.len()).sum();
        if cfg.k == 0 || cfg.k > n_entities {
            return Err(Error::OutOfRange(format!(
                "slot count K={} must be between 1 and the entity count {n_entities}",
                cfg.k
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut params = Self::init(corpus, cfg, &mut rng)?;
        let prepared: Vec<Prepared> = corpus.iter().map(|c| params.prepare(c)).collect::<Result<_>>()?;
        let grads0 = params.zero_grads();
        let mut adam: Vec<AdamState> = grads0
            .iter()
            .map(|g| AdamState::new(g.len(), cfg.lr, cfg.beta1, cfg.beta2))
            .collect::<Result<_>>()?;
        let eval_seed = cfg.seed ^ 0x5EED_E1B0;
        let mut report = TrainReport { elbo: Vec::new() };
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size.max(1)) {
                let mut g = params.zero_grads();
                let log_lam = params.log_lambda();
                let mut ents = 0usize;
                for &ci in batch {
                    let p = &prepared[ci];
                    let em = params.emissions(p, &log_lam, true);
                    let eps: Vec<f64> = (0..TYPE_DIM).map(|_| StandardNormal.sample(&mut rng)).collect();
                    params.sample_elbo(p, &em, &eps, Some(&mut g))?;
                    ents += p.x.len();
                }
                let scale = 1.0 / ents.max(1) as f64;
                for (b, (grad, st)) in g.iter_mut().zip(adam.iter_mut()).enumerate() {
                    grad.iter_mut().for_each(|x| *x *= scale);
                    st.step(params.block_mut(b), grad).map_err(|e| {
                        Error::NonFinite(format!("event model gradient at epoch {epoch}: {e}"))
                    })?;
                }
            }
            let elbo = params.elbo(corpus, cfg.eval_samples, eval_seed)?;
            if !elbo.is_finite() {
                return Err(Error::NonFinite(format!("ELBO at epoch {epoch} is {elbo}")));
            }
            log::debug!("event model epoch {epoch}: ELBO/entity {elbo:.5}");
            report.elbo.push(elbo);
        }
        Ok((params, report))
    }
}

/// k-means++ seeding: indices of `k` distinct starting centres.
fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut centres = vec![rng.random_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[centres[0]])).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            (0..points.len()).find(|i| !centres.contains(i)).unwrap_or(0)
        } else {
            let mut u = rng.random_range(0.0..total);
            let mut pick = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        };
        centres.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    centres
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Lloyd iterations from k-means++ seeds; the restart with the lowest
/// inertia wins. Returns centres and labels.
fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = points[0].len();
    let mut best: Option<(f64, Vec<Vec<f64>>, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let mut centres: Vec<Vec<f64>> = kmeans_pp(points, k, rng).into_iter().map(|i| points[i].clone()).collect();
        let mut labels = vec![0; points.len()];
        for _ in 0..iters {
            for (p, l) in points.iter().zip(labels.iter_mut()) {
                *l = (0..k)
                    .min_by(|&a, &b| sq_dist(p, &centres[a]).total_cmp(&sq_dist(p, &centres[b])))
                    .unwrap_or(0);
            }
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &l) in points.iter().zip(&labels) {
                counts[l] += 1;
                for d in 0..dim {
                    sums[l][d] += p[d];
                }
            }
            for s in 0..k {
                if counts[s] > 0 {
                    centres[s] = sums[s].iter().map(|v| v / counts[s] as f64).collect();
                }
            }
        }
        let inertia: f64 = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centres[l])).sum();
        if best.as_ref().is_none_or(|b| inertia < b.0) {
            best = Some((inertia, centres, labels));
        }
    }
    let (_, c, l) = best.expect("at least one restart");
    (c, l)
}

/// Fraction of items whose predicted cluster's majority true label matches
/// their own true label.
pub fn purity(pred: &[usize], truth: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let mut counts: std::collections::HashMap<(usize, usize), usize> = Default::default();
    for (p, t) in pred.iter().zip(truth) {
        *counts.entry((*p, *t)).or_default() += 1;
    }
    let mut best: std::collections::HashMap<usize, usize> = Default::default();
    for ((p, _), c) in counts {
        let b = best.entry(p).or_default();
        *b = (*b).max(c);
    }
    best.values().sum::<usize>() as f64 / pred.len() as f64
}

/// Settings for sampling a corpus from the generative model itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeSpec {
    pub k: usize,
    pub clusters: usize,
    /// Distinct ground-truth event types; each cluster's `t` is its type's
    /// prototype plus small noise.
    pub types: usize,
    pub entities_per_cluster: usize,
    pub feat_dim: usize,
    pub words_per_slot: usize,
    /// Spread of slot feature means (in units of the unit within-slot sd).
    pub separation: f64,
}

impl Default for GenerativeSpec {
    fn default() -> Self {
        GenerativeSpec {
            k: 3,
            clusters: 200,
            types: 4,
            entities_per_cluster: 12,
            feat_dim: 8,
            words_per_slot: 15,
            separation: 2.5,
        }
    }
}

/// A corpus sampled from the model with its latent truth.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub clusters: Vec<NewsCluster>,
    /// True slot of every entity, cluster by cluster.
    pub slots: Vec<Vec<usize>>,
    /// Ground-truth type index per cluster.
    pub types: Vec<usize>,
}

pub fn generate_corpus(spec: &GenerativeSpec, seed: u64) -> GeneratedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let k = spec.k;
    let w: Vec<f64> = (0..k * TYPE_DIM).map(|_| 0.15 * normal(&mut rng)).collect();
    let prototypes: Vec<Vec<f64>> = (0..spec.types)
        .map(|_| (0..TYPE_DIM).map(|_| normal(&mut rng)).collect())
        .collect();
    let means: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..spec.feat_dim).map(|_| spec.separation * normal(&mut rng)).collect())
        .collect();
    let r_means: Vec<f64> = (0..k).map(|s| (s as f64 + 0.5) / k as f64).collect();
    let words: Vec<Vec<String>> = (0..k)
        .map(|s| (0..spec.words_per_slot).map(|j| format!("s{s}w{j}")).collect())
        .collect();
    let start = chrono::NaiveDate::from_ymd_opt(2001, 1, 1).expect("valid date");

    let mut out = GeneratedCorpus {
        clusters: Vec::with_capacity(spec.clusters),
        slots: Vec::with_capacity(spec.clusters),
        types: Vec::with_capacity(spec.clusters),
    };
    for c in 0..spec.clusters {
        let ty = rng.random_range(0..spec.types);
        let t: Vec<f64> = prototypes[ty].iter().map(|p| p + 0.1 * normal(&mut rng)).collect();
        let logits: Vec<f64> = (0..k)
            .map(|s| w[s * TYPE_DIM..(s + 1) * TYPE_DIM].iter().zip(&t).map(|(a, b)| a * b).sum())
            .collect();
        let pi: Vec<f64> = log_softmax(&logits).iter().map(|v| v.exp()).collect();
        let mut entities = Vec::new();
        let mut tokens = Vec::new();
        let mut slots = Vec::new();
        for e in 0..spec.entities_per_cluster {
            let mut u: f64 = rng.random();
            let mut s = k - 1;
            for (j, p) in pi.iter().enumerate() {
                if u < *p {
                    s = j;
                    break;
                }
                u -= p;
            }
            // Zipf-like head-word choice within the slot's vocabulary.
            let weights: Vec<f64> = (0..spec.words_per_slot).map(|j| 1.0 / (j + 1) as f64).collect();
            let wsum: f64 = weights.iter().sum();
            let mut u: f64 = rng.random::<f64>() * wsum;
            let mut j = spec.words_per_slot - 1;
            for (i, wt) in weights.iter().enumerate() {
                if u < *wt {
                    j = i;
                    break;
                }
                u -= wt;
            }
            let head = words[s][j].clone();
            let features = means[s].iter().map(|m| m + normal(&mut rng)).collect();
            let redundancy = (r_means[s] + 0.05 * normal(&mut rng)).clamp(0.0, 1.0);
            tokens.push(Token {
                id: e + 1,
                form: head.clone(),
                lemma: head.clone(),
                upos: "NOUN".into(),
                xpos: "NN".into(),
                feats: "_".into(),
                head: 0,
                deprel: "dep".into(),
                misc: "_".into(),
            });
            entities.push(Entity {
                head,
                item: 0,
                sentence: 0,
                token: e,
                features,
                redundancy,
            });
            slots.push(s);
        }
        out.clusters.push(NewsCluster {
            date: start + chrono::Duration::days(c as i64),
            items: vec![ClusterItem {
                id: format!("g{c}"),
                sentences: vec![Sentence {
                    sent_id: None,
                    text: None,
                    tokens,
                }],
            }],
            entities,
        });
        out.slots.push(slots);
        out.types.push(ty);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_from_factors(&[0.7, 0.3], &[0.2, 0.2], &[0.5, 0.5]), 0);
        assert_eq!(argmax_from_factors(&[0.5, 0.4], &[0.2, 0.4], &[0.1, 0.3]), 1);
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&[0, 0, 1, 1], &[2, 2, 0, 0]), 1.0);
        assert_eq!(purity(&[0, 0, 0, 0], &[1, 1, 2, 2]), 0.5);
    }

    #[test]
    fn elbo_gradient_matches_finite_differences() {
        let corpus = generate_corpus(
            &GenerativeSpec {
                clusters: 2,
                entities_per_cluster: 5,
                feat_dim: 3,
                words_per_slot: 3,
                ..Default::default()
            },
            4,
        );
        let cfg = OdeeConfig {
            k: 3,
            epochs: 0,
            hidden_dim: 4,
            ..Default::default()
        };
        let (mut params, _) = OdeeParams::train(&corpus.clusters, &cfg).unwrap();
        params.lambda.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 * (i as f64).sin());
        params.theta_w.iter_mut().enumerate().for_each(|(i, v)| *v = 0.05 * (i as f64).cos());
        let prep = params.prepare(&corpus.clusters[0]).unwrap();
        let eps: Vec<f64> = (0..TYPE_DIM).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let mut g = params.zero_grads();
        let em = params.emissions(&prep, &params.log_lambda(), true);
        params.sample_elbo(&prep, &em, &eps, Some(&mut g)).unwrap();
        let loss = |p: &OdeeParams| {
            let em = p.emissions(&prep, &p.log_lambda(), true);
            -p.sample_elbo(&prep, &em, &eps, None).unwrap()
        };
        for b in [W, B, LAM, BM, BLV, GM, GLV, ENC] {
            let len = g[b].len();
            for i in (0..len).step_by((len / 7).max(1)) {
                let mut up = params.clone();
                up.block_mut(b)[i] += 1e-6;
                let mut dn = params.clone();
                dn.block_mut(b)[i] -= 1e-6;
                let num = (loss(&up) - loss(&dn)) / 2e-6;
                let err = (num - g[b][i]).abs() / (num.abs() + g[b][i].abs()).max(1e-6);
                assert!(err < 1e-4, "block {b} index {i}: analytic {} numeric {num}", g[b][i]);
            }
        }
    }

    #[test]
    fn rejects_bad_k_and_empty_corpus() {
        assert!(OdeeParams::train(&[], &OdeeConfig::default()).is_err());
        let corpus = generate_corpus(&GenerativeSpec { clusters: 1, entities_per_cluster: 3, ..Default::default() }, 1);
        let cfg = OdeeConfig { k: 5, ..Default::default() };
        assert!(OdeeParams::train(&corpus.clusters, &cfg).is_err());
    }
}
