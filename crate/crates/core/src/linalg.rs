//! Small dense least-squares helpers used by the regression-based tests.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub ssr: f64,
    pub r_squared: f64,
    pub nobs: usize,
}

impl OlsFit {
    /// Gaussian log-likelihood at the OLS solution.
    pub fn loglik(&self) -> f64 {
        let n = self.nobs as f64;
        -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (self.ssr / n).ln() + 1.0)
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.loglik() + 2.0 * self.coefficients.len() as f64
    }

    pub fn t_value(&self, i: usize) -> f64 {
        self.coefficients[i] / self.std_errors[i]
    }
}

/// Ordinary least squares of `y` on the rows of `x` (row-major, each row one
/// observation). The design is used as given; add a column of ones for an
/// intercept. `r_squared` is the centred R².
pub fn ols(y: &[f64], x: &[Vec<f64>]) -> Result<OlsFit> {
    let n = y.len();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            what: "regression rows",
            expected: n,
            got: x.len(),
        });
    }
    let k = x.first().map_or(0, Vec::len);
    if n <= k {
        return Err(Error::InsufficientData {
            what: "least squares",
            needed: k + 1,
            got: n,
        });
    }
    let design = DMatrix::from_fn(n, k, |i, j| x[i][j]);
    let target = DVector::from_column_slice(y);
    let xtx = design.transpose() * &design;
    let xty = design.transpose() * &target;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("singular regression design".into()))?;
    let l = chol.l();
    let max_diag = (0..k).map(|i| xtx[(i, i)]).fold(0.0_f64, f64::max);
    let min_pivot = (0..k).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * max_diag) {
        return Err(Error::Degenerate("singular regression design".into()));
    }
    let beta = chol.solve(&xty);
    let resid = &target - &design * &beta;
    let ssr = resid.norm_squared();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let s2 = ssr / (n - k) as f64;
    let inv = chol.inverse();
    let std_errors = (0..k).map(|i| (s2 * inv[(i, i)]).sqrt()).collect();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        ssr,
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 },
        nobs: n,
    })
}
