//! Augmented Dickey–Fuller test (constant-only regression) with MacKinnon's
//! response-surface p-values and critical values.

use statrs::distribution::{ContinuousCDF, Normal};

use super::TestReport;
use crate::error::{Error, Result};
use crate::linalg::ols;

// Constant-only, one I(1) series.
const TAU_MAX: f64 = 2.74;
const TAU_MIN: f64 = -18.83;
const TAU_STAR: f64 = -1.61;
const SMALL_P: [f64; 3] = [2.1659, 1.4412, 3.8269e-2];
const LARGE_P: [f64; 4] = [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2];
// 1%, 5%, 10%: b0 + b1/T + b2/T^2 + b3/T^3
const CRIT: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];

/// Approximate p-value of an ADF t-statistic.
pub fn mackinnon_p_value(stat: f64) -> f64 {
    if stat > TAU_MAX {
        return 1.0;
    }
    if stat < TAU_MIN {
        return 0.0;
    }
    let poly = if stat <= TAU_STAR {
        SMALL_P.iter().rev().fold(0.0, |acc, c| acc * stat + c)
    } else {
        LARGE_P.iter().rev().fold(0.0, |acc, c| acc * stat + c)
    };
    Normal::standard().cdf(poly)
}

/// Finite-sample 1%, 5% and 10% critical values for `nobs` regression rows.
pub fn adf_critical_values(nobs: usize) -> [f64; 3] {
    let t = nobs as f64;
    CRIT.map(|b| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
}

/// `floor(12 (n/100)^{1/4})`, clipped so the regression keeps enough rows.
pub fn default_adf_max_lag(n: usize) -> usize {
    let rule = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
    rule.min((n / 2).saturating_sub(2))
}

/// Rows of `Δy_t = a + γ y_{t-1} + Σ δ_i Δy_{t-i}` using lags `0..lags`,
/// starting at the first row that has `start_lag` lags available.
fn design(series: &[f64], diff: &[f64], lags: usize, start_lag: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut y = Vec::with_capacity(diff.len() - start_lag);
    let mut x = Vec::with_capacity(diff.len() - start_lag);
    for t in start_lag..diff.len() {
        y.push(diff[t]);
        let mut row = Vec::with_capacity(lags + 2);
        row.push(series[t]);
        row.push(1.0);
        row.extend((1..=lags).map(|i| diff[t - i]));
        x.push(row);
    }
    (y, x)
}

/// ADF test with the augmentation order chosen by AIC over `0..=max_lag`
/// on a common estimation sample, then re-estimated on all usable rows.
pub fn adf_test(series: &[f64], max_lag: usize) -> Result<TestReport> {
    let n = series.len();
    if n < 10 + max_lag {
        return Err(Error::InsufficientData {
            what: "ADF test",
            needed: 10 + max_lag,
            got: n,
        });
    }
    let diff: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let mut best: Option<(f64, usize)> = None;
    for lags in 0..=max_lag {
        let (y, x) = design(series, &diff, lags, max_lag);
        let fit = ols(&y, &x)?;
        let aic = fit.aic();
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, lags));
        }
    }
    let lags = best.map(|(_, l)| l).unwrap_or(0);
    let (y, x) = design(series, &diff, lags, lags);
    let fit = ols(&y, &x)?;
    let stat = fit.t_value(0);
    Ok(TestReport::new(stat, mackinnon_p_value(stat), lags))
}

pub fn adf_test_default(series: &[f64]) -> Result<TestReport> {
    adf_test(series, default_adf_max_lag(series.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_is_monotone_and_bounded() {
        let mut prev = 0.0;
        for i in 0..200 {
            let s = -20.0 + i as f64 * 0.12;
            let p = mackinnon_p_value(s);
            assert!((0.0..=1.0).contains(&p));
            assert!(p + 1e-12 >= prev, "not monotone at {s}");
            prev = p;
        }
    }

    #[test]
    fn five_percent_critical_value_has_five_percent_p() {
        let cv = adf_critical_values(100_000)[1];
        assert!((mackinnon_p_value(cv) - 0.05).abs() < 0.005);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            adf_test(&[1.0, 2.0, 3.0, 2.0, 1.0], 0),
            Err(Error::InsufficientData { .. })
        ));
    }
}
