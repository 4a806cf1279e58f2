//! GARCH(m, s) volatility model for (ARIMA) innovations:
//!
//! `a_t = σ_t u_t`, `σ_t² = α₀ + Σ α_i a²_{t-i} + Σ β_j σ²_{t-j}`, `u_t ~ N(0, 1)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::document::Versioned;
use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::optim::Bfgs;
use crate::timeseries::TestReport;

const FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchModel {
    pub alpha0: f64,
    /// ARCH coefficients `α_1..α_m`.
    pub alpha: Vec<f64>,
    /// GARCH coefficients `β_1..β_s`.
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub bic: f64,
    /// Pre-sample value used for both `a²` and `σ²` in the recursion.
    pub backcast: f64,
    /// Set when an estimate had to be clamped back into the feasible region.
    #[serde(default)]
    pub projected: bool,
    /// Fitted conditional variances, one per training residual. Not serialised.
    #[serde(skip)]
    pub sigma2_path: Vec<f64>,
}

impl Versioned for GarchModel {
    const FORMAT: &'static str = "oilcast.garch";
    const VERSION: u32 = 1;
}

/// Engle's LM test: `n·R²` from regressing `a_t²` on a constant and
/// `a²_{t-1..t-lags}`, chi-square with `lags` degrees of freedom.
pub fn lm_arch_test(residuals: &[f64], lags: usize) -> Result<TestReport> {
    if lags < 1 {
        return Err(Error::OutOfRange("ARCH test needs at least one lag".into()));
    }
    let n = residuals.len();
    if n <= 2 * lags + 1 {
        return Err(Error::InsufficientData {
            what: "ARCH LM test",
            needed: 2 * lags + 2,
            got: n,
        });
    }
    let sq: Vec<f64> = residuals.iter().map(|a| a * a).collect();
    let y = &sq[lags..];
    let x: Vec<Vec<f64>> = (lags..n)
        .map(|t| std::iter::once(1.0).chain((1..=lags).map(|i| sq[t - i])).collect())
        .collect();
    let fit = ols(y, &x)?;
    let lm = y.len() as f64 * fit.r_squared;
    let chi = ChiSquared::new(lags as f64).expect("positive dof");
    Ok(TestReport::new(lm, chi.sf(lm), lags))
}

/// Conditional variance recursion over `residuals`; pre-sample `a²` and `σ²`
/// are both `backcast`.
pub(crate) fn variance_path(alpha0: f64, alpha: &[f64], beta: &[f64], residuals: &[f64], backcast: f64) -> Vec<f64> {
    let n = residuals.len();
    let mut s2 = Vec::with_capacity(n);
    for t in 0..n {
        let mut v = alpha0;
        for (i, a) in alpha.iter().enumerate() {
            let lag = t as isize - 1 - i as isize;
            let a2 = if lag >= 0 { residuals[lag as usize].powi(2) } else { backcast };
            v += a * a2;
        }
        for (j, b) in beta.iter().enumerate() {
            let lag = t as isize - 1 - j as isize;
            let prev = if lag >= 0 { s2[lag as usize] } else { backcast };
            v += b * prev;
        }
        s2.push(v);
    }
    s2
}

fn gaussian_nll(residuals: &[f64], s2: &[f64]) -> f64 {
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    residuals
        .iter()
        .zip(s2)
        .map(|(a, v)| {
            if *v <= 0.0 {
                f64::INFINITY
            } else {
                0.5 * (ln2pi + v.ln() + a * a / v)
            }
        })
        .sum()
}

/// Softmax with an implicit zero-logit slack entry: every output is positive
/// and the outputs sum to less than one.
fn simplex_with_slack(z: &[f64]) -> Vec<f64> {
    let m = z.iter().fold(0.0_f64, |a, b| a.max(*b));
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let denom = (-m).exp() + exps.iter().sum::<f64>();
    exps.iter().map(|e| e / denom).collect()
}

fn simplex_inverse(c: &[f64]) -> Vec<f64> {
    let slack = 1.0 - c.iter().sum::<f64>();
    c.iter().map(|v| (v / slack).ln()).collect()
}

#[derive(Debug, Clone)]
pub struct GarchFitter {
    pub optimizer: Bfgs,
}

impl Default for GarchFitter {
    fn default() -> Self {
        GarchFitter {
            optimizer: Bfgs {
                max_iter: 500,
                grad_tol: 1e-4,
                f_tol: 1e-12,
            },
        }
    }
}

impl GarchFitter {
    pub fn fit(&self, residuals: &[f64], m: usize, s: usize) -> Result<GarchModel> {
        if m < 1 {
            return Err(Error::OutOfRange("GARCH needs at least one ARCH term".into()));
        }
        let n = residuals.len();
        if n < 100 {
            return Err(Error::InsufficientData {
                what: "GARCH fit",
                needed: 100,
                got: n,
            });
        }
        if residuals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GARCH input".into()));
        }
        let var = residuals.iter().map(|a| a * a).sum::<f64>() / n as f64;
        if !(var > 0.0) {
            return Err(Error::Degenerate("residuals have zero variance".into()));
        }
        let scale = var.sqrt();
        let z: Vec<f64> = residuals.iter().map(|a| a / scale).collect();
        // standardised residuals have unit mean square
        let backcast = 1.0;

        let decode = |u: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
            let coeffs = simplex_with_slack(&u[1..]);
            (u[0].exp(), coeffs[..m].to_vec(), coeffs[m..].to_vec())
        };
        let objective = |u: &[f64]| {
            let (a0, a, b) = decode(u);
            gaussian_nll(&z, &variance_path(a0, &a, &b, &z, backcast))
        };

        let starts: &[(f64, f64)] = if s > 0 {
            &[(0.05, 0.90), (0.15, 0.80), (0.10, 0.60), (0.30, 0.30)]
        } else {
            &[(0.2, 0.0), (0.5, 0.0), (0.05, 0.0)]
        };
        let mut best: Option<crate::optim::Minimum> = None;
        let mut last_err = None;
        for &(a_tot, b_tot) in starts {
            let mut coeffs: Vec<f64> = vec![a_tot / m as f64; m];
            coeffs.extend(vec![b_tot / s.max(1) as f64; s]);
            let persistence = a_tot + b_tot;
            let mut u0 = vec![(1.0 - persistence).max(0.05).ln()];
            u0.extend(simplex_inverse(&coeffs));
            match self.optimizer.minimize(objective, &u0).require_converged() {
                Ok(min) => {
                    if best.as_ref().is_none_or(|b| min.value < b.value) {
                        best = Some(min);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        let min = match (best, last_err) {
            (Some(b), _) => b,
            (None, Some(e)) => return Err(e),
            (None, None) => unreachable!("at least one start"),
        };

        let (a0_std, mut alpha, mut beta) = decode(&min.x);
        let mut projected = false;
        for c in alpha.iter_mut().chain(beta.iter_mut()) {
            if *c < FLOOR {
                *c = 0.0;
                projected = true;
            }
        }
        let total: f64 = alpha.iter().chain(&beta).sum();
        if total >= 1.0 - FLOOR {
            let shrink = (1.0 - 1e-6) / total;
            alpha.iter_mut().chain(beta.iter_mut()).for_each(|c| *c *= shrink);
            projected = true;
        }
        let alpha0 = a0_std * var;
        let sigma2_path = variance_path(alpha0, &alpha, &beta, residuals, var);
        let loglik = -gaussian_nll(residuals, &sigma2_path);
        let k = (1 + m + s) as f64;
        Ok(GarchModel {
            alpha0,
            alpha,
            beta,
            loglik,
            bic: -2.0 * loglik + k * (n as f64).ln(),
            backcast: var,
            projected,
            sigma2_path,
        })
    }
}

/// Gaussian maximum likelihood GARCH(m, s) with default settings.
pub fn fit(residuals: &[f64], m: usize, s: usize) -> Result<GarchModel> {
    GarchFitter::default().fit(residuals, m, s)
}

/// Grid search over `m, s ∈ {1, 2}` by BIC.
pub fn select_and_fit(residuals: &[f64]) -> Result<GarchModel> {
    let mut best: Option<GarchModel> = None;
    let mut last_err = None;
    for m in 1..=2 {
        for s in 1..=2 {
            match fit(residuals, m, s) {
                Ok(model) => {
                    if best.as_ref().is_none_or(|b| model.bic < b.bic) {
                        best = Some(model);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Degenerate("no GARCH order could be fitted".into())))
}

impl GarchModel {
    pub fn new(alpha0: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if !(alpha0 > 0.0) {
            return Err(Error::OutOfRange("alpha0 must be positive".into()));
        }
        if alpha.iter().chain(&beta).any(|c| !(*c >= 0.0)) {
            return Err(Error::OutOfRange("ARCH/GARCH coefficients must be nonnegative".into()));
        }
        let backcast = {
            let p = alpha.iter().chain(&beta).sum::<f64>();
            if p < 1.0 {
                alpha0 / (1.0 - p)
            } else {
                alpha0
            }
        };
        Ok(GarchModel {
            alpha0,
            alpha,
            beta,
            loglik: f64::NAN,
            bic: f64::NAN,
            backcast,
            projected: false,
            sigma2_path: Vec::new(),
        })
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).sum()
    }

    /// `α₀ / (1 - Σ(α + β))`, or `None` when not covariance stationary.
    pub fn unconditional_variance(&self) -> Option<f64> {
        let p = self.persistence();
        (p < 1.0).then(|| self.alpha0 / (1.0 - p))
    }

    /// Conditional variances `σ_t²` for a residual sequence, each depending
    /// only on residuals before `t`.
    pub fn conditional_variances(&self, residuals: &[f64]) -> Vec<f64> {
        variance_path(self.alpha0, &self.alpha, &self.beta, residuals, self.backcast)
    }

    /// Variance forecasts for `1..=horizon` steps ahead. `recent_resid2` and
    /// `recent_sigma2` hold the latest squared residuals and conditional
    /// variances, most recent last; missing older lags fall back to the oldest
    /// supplied value.
    pub fn forecast_variance(&self, recent_resid2: &[f64], recent_sigma2: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if horizon < 1 {
            return Err(Error::OutOfRange("forecast horizon must be at least 1".into()));
        }
        if recent_resid2.is_empty() || recent_sigma2.is_empty() {
            return Err(Error::InsufficientData {
                what: "variance forecast state",
                needed: 1,
                got: 0,
            });
        }
        if recent_resid2.iter().chain(recent_sigma2).any(|v| !(*v >= 0.0)) {
            return Err(Error::OutOfRange("squared residuals and variances must be nonnegative".into()));
        }
        // lag k (1-based) counted back from the forecast origin
        let lagged = |hist: &[f64], future: &[f64], k: usize| -> f64 {
            if k <= future.len() {
                future[future.len() - k]
            } else {
                let back = k - future.len();
                let idx = hist.len().saturating_sub(back);
                hist[idx.min(hist.len() - 1)]
            }
        };
        let mut out: Vec<f64> = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let mut v = self.alpha0;
            for (i, a) in self.alpha.iter().enumerate() {
                // E[a²] of a future innovation is its forecast variance
                v += a * lagged(recent_resid2, &out, i + 1);
            }
            for (j, b) in self.beta.iter().enumerate() {
                v += b * lagged(recent_sigma2, &out, j + 1);
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Simulates `n` innovations after discarding `burn_in` draws.
    pub fn simulate<R: Rng + ?Sized>(&self, n: usize, burn_in: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let m = self.alpha.len();
        let s = self.beta.len();
        let start = self.unconditional_variance().unwrap_or(self.alpha0);
        let mut a2 = vec![start; m.max(1)];
        let mut s2 = vec![start; s.max(1)];
        let mut resid = Vec::with_capacity(n);
        let mut vars = Vec::with_capacity(n);
        for t in 0..n + burn_in {
            let mut v = self.alpha0;
            for (i, a) in self.alpha.iter().enumerate() {
                v += a * a2[a2.len() - 1 - i];
            }
            for (j, b) in self.beta.iter().enumerate() {
                v += b * s2[s2.len() - 1 - j];
            }
            let u: f64 = rng.sample(StandardNormal);
            let a = v.sqrt() * u;
            a2.push(a * a);
            s2.push(v);
            if a2.len() > m.max(1) + 1 {
                a2.remove(0);
            }
            if s2.len() > s.max(1) + 1 {
                s2.remove(0);
            }
            if t >= burn_in {
                resid.push(a);
                vars.push(v);
            }
        }
        (resid, vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_arithmetic() {
        let m = GarchModel::new(0.1, vec![0.2], vec![0.7]).unwrap();
        let f = m.forecast_variance(&[1.0], &[1.0], 1).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_variance_model() {
        let m = GarchModel::new(0.3, vec![0.0], vec![0.0]).unwrap();
        let f = m.forecast_variance(&[4.0], &[2.0], 10).unwrap();
        assert!(f.iter().all(|v| (*v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn long_horizon_converges_to_unconditional() {
        let m = GarchModel::new(0.1, vec![0.2], vec![0.7]).unwrap();
        let f = m.forecast_variance(&[3.0], &[2.5], 200).unwrap();
        assert!((f[199] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn precondition_errors() {
        let m = GarchModel::new(0.1, vec![0.2], vec![0.7]).unwrap();
        assert!(matches!(m.forecast_variance(&[1.0], &[1.0], 0), Err(Error::OutOfRange(_))));
        assert!(matches!(m.forecast_variance(&[-1.0], &[1.0], 1), Err(Error::OutOfRange(_))));
        assert!(matches!(fit(&[0.0; 200], 1, 1), Err(Error::Degenerate(_))));
        assert!(matches!(fit(&[0.5; 50], 1, 1), Err(Error::InsufficientData { .. })));
        assert!(matches!(
            lm_arch_test(&[0.1, 0.2, -0.3, 0.4, 0.1], 10),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn simplex_is_feasible() {
        for z in [vec![30.0, 30.0], vec![-40.0, 5.0], vec![0.0, 0.0, 0.0]] {
            let c = simplex_with_slack(&z);
            assert!(c.iter().all(|v| *v >= 0.0));
            assert!(c.iter().sum::<f64>() < 1.0);
        }
    }
}
