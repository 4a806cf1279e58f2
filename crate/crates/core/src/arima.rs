//! ARMA(p, q) on a `d`-times differenced series:
//!
//! `c_t = c + Σ α_i c_{t-i} + ε_t + Σ θ_j ε_{t-j}`
//!
//! Estimated by maximising the conditional Gaussian likelihood (pre-sample
//! residuals zero, the first `p` observations conditioned on). AR and MA
//! coefficients are optimised through a partial-autocorrelation
//! parameterisation so every iterate is stationary and invertible.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::document::Versioned;
use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::optim::{numeric_hessian, Bfgs};
use crate::timeseries::{adf_test_default, difference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaSpec {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        ArimaSpec { p, d, q }
    }

    /// `p = q = 0`: the differenced series is modelled as constant plus noise.
    pub fn is_intercept_only(&self) -> bool {
        self.p == 0 && self.q == 0
    }

    fn n_coeffs(&self) -> usize {
        self.p + self.q + 1
    }
}

impl std::fmt::Display for ArimaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub spec: ArimaSpec,
    pub intercept: f64,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Standard errors in the order `[intercept, ar.., ma..]`.
    #[serde(default)]
    pub std_errors: Vec<f64>,
    /// In-sample residuals on the differenced scale, one per differenced
    /// observation. Not serialised.
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl Versioned for ArimaModel {
    const FORMAT: &'static str = "oilcast.arima";
    const VERSION: u32 = 1;
}

/// Maps unconstrained reals to the coefficients of a stationary AR
/// polynomial `1 - Σ φ_i z^i` via partial autocorrelations `tanh(u)`.
fn pacf_to_coeffs(u: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(u.len());
    for (k, &uk) in u.iter().enumerate() {
        let r = uk.tanh();
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

/// Inverse of [`pacf_to_coeffs`]; `None` when the polynomial is not
/// stationary.
fn coeffs_to_pacf(phi: &[f64]) -> Option<Vec<f64>> {
    let mut cur = phi.to_vec();
    let mut u = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let r = cur[k];
        if !(r.abs() < 1.0) {
            return None;
        }
        u[k] = r.atanh();
        let denom = 1.0 - r * r;
        let prev: Vec<f64> = (0..k).map(|j| (cur[j] + r * cur[k - 1 - j]) / denom).collect();
        cur = prev;
    }
    Some(u)
}

/// Shrinks coefficients toward zero until they map to a valid
/// parameterisation.
fn to_unconstrained(phi: &[f64]) -> Vec<f64> {
    let mut scale = 1.0;
    loop {
        let scaled: Vec<f64> = phi.iter().map(|v| v * scale).collect();
        if let Some(u) = coeffs_to_pacf(&scaled) {
            if u.iter().all(|v| v.abs() < 3.0) {
                return u;
            }
        }
        scale *= 0.8;
        if scale < 1e-6 {
            return vec![0.0; phi.len()];
        }
    }
}

/// Conditional residuals of an ARMA model, `ε_t = 0` for `t < start`.
pub(crate) fn arma_residuals(x: &[f64], c: f64, ar: &[f64], ma: &[f64], start: usize) -> Vec<f64> {
    let mut eps = vec![0.0; x.len()];
    for t in start..x.len() {
        let mut pred = c;
        for (i, a) in ar.iter().enumerate() {
            pred += a * x[t - 1 - i];
        }
        for (j, th) in ma.iter().enumerate() {
            if t > j {
                pred += th * eps[t - 1 - j];
            }
        }
        eps[t] = x[t] - pred;
    }
    eps
}

fn profile_nll(x: &[f64], params: &[f64], spec: ArimaSpec, start: usize) -> f64 {
    let (c, rest) = params.split_first().unwrap();
    let (ar, ma) = rest.split_at(spec.p);
    let eps = arma_residuals(x, *c, ar, ma, start);
    let m = (x.len() - start) as f64;
    let ssr: f64 = eps[start..].iter().map(|e| e * e).sum();
    0.5 * m * ((2.0 * std::f64::consts::PI).ln() + (ssr / m).ln() + 1.0)
}

/// Hannan–Rissanen style starting values `[c, ar.., ma..]`.
fn starting_values(x: &[f64], spec: ArimaSpec) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let fallback = {
        let mut v = vec![0.0; spec.n_coeffs()];
        v[0] = mean;
        v
    };
    if spec.is_intercept_only() {
        return fallback;
    }
    let long = if spec.q > 0 {
        (spec.p.max(spec.q) + 3).min(n / 10).max(1)
    } else {
        0
    };
    let eps_hat: Vec<f64> = if long > 0 {
        let rows: Vec<Vec<f64>> = (long..n)
            .map(|t| std::iter::once(1.0).chain((1..=long).map(|i| x[t - i])).collect())
            .collect();
        match ols(&x[long..], &rows) {
            Ok(fit) => {
                let mut e = vec![0.0; n];
                for (k, t) in (long..n).enumerate() {
                    let pred: f64 = rows[k].iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum();
                    e[t] = x[t] - pred;
                }
                e
            }
            Err(_) => return fallback,
        }
    } else {
        vec![0.0; n]
    };
    let start = (long + spec.q).max(spec.p);
    if n <= start + spec.n_coeffs() + 2 {
        return fallback;
    }
    let rows: Vec<Vec<f64>> = (start..n)
        .map(|t| {
            std::iter::once(1.0)
                .chain((1..=spec.p).map(|i| x[t - i]))
                .chain((1..=spec.q).map(|j| eps_hat[t - j]))
                .collect()
        })
        .collect();
    match ols(&x[start..], &rows) {
        Ok(fit) => fit.coefficients,
        Err(_) => fallback,
    }
}

#[derive(Debug, Clone)]
pub struct ArimaFitter {
    pub optimizer: Bfgs,
}

impl Default for ArimaFitter {
    fn default() -> Self {
        ArimaFitter {
            optimizer: Bfgs {
                max_iter: 400,
                grad_tol: 1e-5,
                f_tol: 1e-11,
            },
        }
    }
}

impl ArimaFitter {
    pub fn fit(&self, series: &[f64], spec: ArimaSpec) -> Result<ArimaModel> {
        if series.len() <= spec.d {
            return Err(Error::InsufficientData {
                what: "ARIMA fit",
                needed: spec.d + 10 * spec.n_coeffs() + 1,
                got: series.len(),
            });
        }
        let x = difference(series, spec.d)?;
        self.fit_differenced(&x, spec, spec.p)
    }

    /// Fits the ARMA part on an already differenced series, conditioning the
    /// likelihood on the first `start` observations (`start >= p`).
    pub(crate) fn fit_differenced(&self, x: &[f64], spec: ArimaSpec, start: usize) -> Result<ArimaModel> {
        let needed = 10 * spec.n_coeffs() + 1;
        if x.len() < needed {
            return Err(Error::InsufficientData {
                what: "ARIMA fit (differenced length)",
                needed,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ARIMA input".into()));
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::Degenerate("differenced series is constant".into()));
        }
        let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();

        let init = starting_values(&z, spec);
        let mut u0 = vec![init[0]];
        u0.extend(to_unconstrained(&init[1..1 + spec.p]));
        let neg_ma: Vec<f64> = init[1 + spec.p..].iter().map(|v| -v).collect();
        u0.extend(to_unconstrained(&neg_ma));

        let decode = |u: &[f64]| -> Vec<f64> {
            let mut out = vec![u[0]];
            out.extend(pacf_to_coeffs(&u[1..1 + spec.p]));
            out.extend(pacf_to_coeffs(&u[1 + spec.p..]).into_iter().map(|v| -v));
            out
        };
        let objective = |u: &[f64]| profile_nll(&z, &decode(u), spec, start);
        let min = self.optimizer.minimize(objective, &u0).require_converged()?;

        let std_params = decode(&min.x);
        let ar = std_params[1..1 + spec.p].to_vec();
        let ma = std_params[1 + spec.p..].to_vec();
        let ar_sum: f64 = ar.iter().sum();
        let intercept = mean * (1.0 - ar_sum) + sd * std_params[0];

        let mut natural = vec![intercept];
        natural.extend(&ar);
        natural.extend(&ma);
        let eps = arma_residuals(x, intercept, &ar, &ma, start);
        let m = x.len() - start;
        let ssr: f64 = eps[start..].iter().map(|e| e * e).sum();
        let sigma2 = ssr / m as f64;
        let loglik = -profile_nll(x, &natural, spec, start);
        let k = (spec.n_coeffs() + 1) as f64;
        let aic = -2.0 * loglik + 2.0 * k;
        let bic = -2.0 * loglik + k * (m as f64).ln();

        let std_errors = standard_errors(x, &natural, spec, start);

        let mu = if (1.0 - ar_sum).abs() > 1e-8 {
            intercept / (1.0 - ar_sum)
        } else {
            mean
        };
        let mut residuals = eps;
        for (t, r) in residuals.iter_mut().enumerate().take(start) {
            *r = x[t] - mu;
        }

        Ok(ArimaModel {
            spec,
            intercept,
            ar_coeffs: ar,
            ma_coeffs: ma,
            sigma2,
            loglik,
            aic,
            bic,
            std_errors,
            residuals,
        })
    }
}

fn standard_errors(x: &[f64], natural: &[f64], spec: ArimaSpec, start: usize) -> Vec<f64> {
    let hess = numeric_hessian(&|p: &[f64]| profile_nll(x, p, spec, start), natural);
    let k = natural.len();
    let h = nalgebra::DMatrix::from_fn(k, k, |i, j| hess[i][j]);
    match h.try_inverse() {
        Some(inv) => (0..k)
            .map(|i| {
                let v = inv[(i, i)];
                if v > 0.0 {
                    v.sqrt()
                } else {
                    f64::NAN
                }
            })
            .collect(),
        None => vec![f64::NAN; k],
    }
}

/// Fits with the default optimizer settings.
pub fn fit(series: &[f64], spec: ArimaSpec) -> Result<ArimaModel> {
    ArimaFitter::default().fit(series, spec)
}

/// Chooses `d` by repeated ADF testing (capped at 2) and `(p, q)` by BIC over
/// the grid `0..=max_p × 0..=max_q` (both capped at 5). Ties prefer smaller
/// `p + q`, then smaller `p`. Falls back to `(1, d, 1)` if nothing fits.
pub fn select_order(series: &[f64], max_p: usize, max_q: usize) -> ArimaSpec {
    let max_p = max_p.min(5);
    let max_q = max_q.min(5);
    let mut d = 0;
    let mut x = series.to_vec();
    while d < 2 {
        match adf_test_default(&x) {
            Ok(rep) if rep.reject_at_5pct => break,
            Ok(_) => {}
            Err(e) => {
                warn!("ADF failed at d={d}: {e}");
                break;
            }
        }
        match difference(&x, 1) {
            Ok(next) => x = next,
            Err(_) => break,
        }
        d += 1;
    }

    let fitter = ArimaFitter::default();
    let mut best: Option<(f64, ArimaSpec)> = None;
    for p in 0..=max_p {
        for q in 0..=max_q {
            let spec = ArimaSpec::new(p, d, q);
            let model = match fitter.fit_differenced(&x, spec, max_p) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let better = match best {
                None => true,
                Some((b, s)) => {
                    let tol = 1e-9 * b.abs().max(1.0);
                    model.bic < b - tol
                        || ((model.bic - b).abs() <= tol
                            && (p + q, p) < (s.p + s.q, s.p))
                }
            };
            if better {
                best = Some((model.bic, spec));
            }
        }
    }
    best.map(|(_, s)| s).unwrap_or(ArimaSpec::new(1, d, 1))
}

impl ArimaModel {
    /// Builds a model from known coefficients (no fitted statistics).
    pub fn from_coefficients(spec: ArimaSpec, intercept: f64, ar: Vec<f64>, ma: Vec<f64>, sigma2: f64) -> Result<Self> {
        if ar.len() != spec.p {
            return Err(Error::DimensionMismatch {
                what: "AR coefficients",
                expected: spec.p,
                got: ar.len(),
            });
        }
        if ma.len() != spec.q {
            return Err(Error::DimensionMismatch {
                what: "MA coefficients",
                expected: spec.q,
                got: ma.len(),
            });
        }
        if !(sigma2 > 0.0) {
            return Err(Error::OutOfRange("sigma2 must be positive".into()));
        }
        Ok(ArimaModel {
            spec,
            intercept,
            ar_coeffs: ar,
            ma_coeffs: ma,
            sigma2,
            loglik: f64::NAN,
            aic: f64::NAN,
            bic: f64::NAN,
            std_errors: Vec::new(),
            residuals: Vec::new(),
        })
    }

    /// `true` when the AR polynomial is stationary and the MA polynomial invertible.
    pub fn is_stationary_invertible(&self) -> bool {
        let neg_ma: Vec<f64> = self.ma_coeffs.iter().map(|v| -v).collect();
        coeffs_to_pacf(&self.ar_coeffs).is_some() && coeffs_to_pacf(&neg_ma).is_some()
    }

    /// Residuals of the model over a differenced series.
    pub fn residuals_for(&self, differenced: &[f64]) -> Vec<f64> {
        arma_residuals(differenced, self.intercept, &self.ar_coeffs, &self.ma_coeffs, self.spec.p.min(differenced.len()))
    }

    /// Forecasts on the differenced scale, given the differenced history.
    pub fn forecast_differenced(&self, differenced: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if horizon < 1 {
            return Err(Error::OutOfRange("forecast horizon must be at least 1".into()));
        }
        let need = self.spec.p.max(self.spec.q);
        if differenced.len() < need {
            return Err(Error::InsufficientData {
                what: "ARIMA forecast history (differenced)",
                needed: need,
                got: differenced.len(),
            });
        }
        let eps = self.residuals_for(differenced);
        let mut xs = differenced.to_vec();
        let mut es = eps;
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let t = xs.len();
            let mut pred = self.intercept;
            for (i, a) in self.ar_coeffs.iter().enumerate() {
                pred += a * xs[t - 1 - i];
            }
            for (j, th) in self.ma_coeffs.iter().enumerate() {
                if t > j {
                    pred += th * es[t - 1 - j];
                }
            }
            xs.push(pred);
            es.push(0.0);
            out.push(pred);
        }
        Ok(out)
    }

    /// Mean forecasts for the next `horizon` steps on the original scale.
    pub fn forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        let d = self.spec.d;
        if history.len() <= d {
            return Err(Error::InsufficientData {
                what: "ARIMA forecast history",
                needed: d + 1,
                got: history.len(),
            });
        }
        let x = difference(history, d)?;
        let diff_fc = self.forecast_differenced(&x, horizon)?;
        Ok(crate::timeseries::integrate(&diff_fc, &history[history.len() - d..]))
    }

    /// One-step-ahead in-sample predictions on the original scale for every
    /// index `t` in `from..series.len()`, each using only `series[..t]`.
    pub fn one_step_predictions(&self, series: &[f64], from: usize) -> Result<Vec<f64>> {
        let d = self.spec.d;
        let lead = d + self.spec.p.max(self.spec.q);
        if from < lead.max(d + 1) || from > series.len() {
            return Err(Error::OutOfRange(format!(
                "one-step predictions need start >= {} (got {from})",
                lead.max(d + 1)
            )));
        }
        let x = difference(series, d)?;
        let eps = self.residuals_for(&x);
        // For a one-step forecast the level error equals the differenced error.
        Ok((from..series.len()).map(|t| series[t] - eps[t - d]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingForecast {
    /// Predictions for `series[start..]`.
    pub predictions: Vec<f64>,
    pub start: usize,
    pub refits: usize,
    pub last_model: ArimaModel,
}

/// Rolling one-step forecasts over an expanding window. Parameters are
/// re-estimated every `refit_every` steps and held fixed in between; a failed
/// refit keeps the previous parameters.
pub fn rolling_forecast(series: &[f64], spec: ArimaSpec, start: usize, refit_every: usize) -> Result<RollingForecast> {
    let refit_every = refit_every.max(1);
    let fitter = ArimaFitter::default();
    let mut model = fitter.fit(&series[..start], spec)?;
    let mut predictions = Vec::with_capacity(series.len().saturating_sub(start));
    let mut refits = 1;
    let mut t = start;
    while t < series.len() {
        if t > start && (t - start).is_multiple_of(refit_every) {
            match fitter.fit(&series[..t], spec) {
                Ok(m) => {
                    model = m;
                    refits += 1;
                }
                Err(e) => warn!("refit at {t} failed, keeping previous parameters: {e}"),
            }
        }
        let end = (t + refit_every - (t - start) % refit_every).min(series.len());
        let block = model.one_step_predictions(&series[..end], t)?;
        predictions.extend(block);
        t = end;
    }
    Ok(RollingForecast {
        predictions,
        start,
        refits,
        last_model: model,
    })
}
