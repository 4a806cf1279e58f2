//! Price series representation, differencing and the identification
//! diagnostics (ADF, correlogram, portmanteau tests).

mod adf;

pub use adf::{adf_critical_values, adf_test, adf_test_default, default_adf_max_lag, mackinnon_p_value};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Daily closing prices indexed by trading day. Gaps in the calendar are not
/// imputed: consecutive entries are one trading step apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "price series values",
                expected: dates.len(),
                got: values.len(),
            });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "dates must be strictly increasing ({} is followed by {})",
                w[0], w[1]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("price on {}", dates[i])));
        }
        Ok(PriceSeries { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Sub-series over the index range.
    pub fn slice(&self, range: std::ops::Range<usize>) -> PriceSeries {
        PriceSeries {
            dates: self.dates[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    pub reject_at_5pct: bool,
}

impl TestReport {
    pub fn new(statistic: f64, p_value: f64, lags_used: usize) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestReport {
            statistic,
            p_value,
            lags_used,
            reject_at_5pct: p_value < 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    /// `acf[k]` is the lag-k autocorrelation; `acf[0] == 1`.
    pub acf: Vec<f64>,
    /// `pacf[k]` is the lag-k partial autocorrelation; `pacf[0] == 1`.
    pub pacf: Vec<f64>,
    pub n: usize,
}

/// `d`-th order differencing. `difference(y, 1)[t] = y[t+1] - y[t]`.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>> {
    if series.len() <= d {
        return Err(Error::InsufficientData {
            what: "differencing",
            needed: d + 1,
            got: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Inverts `difference` given the `d` values that preceded the differenced
/// block (oldest first), returning the integrated values only.
pub(crate) fn integrate(diffed: &[f64], seeds: &[f64]) -> Vec<f64> {
    let d = seeds.len();
    if d == 0 {
        return diffed.to_vec();
    }
    // last value of each differencing level (level 0 = original series)
    let mut tails = Vec::with_capacity(d);
    let mut level = seeds.to_vec();
    for _ in 0..d {
        tails.push(*level.last().unwrap());
        level = level.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let mut out = Vec::with_capacity(diffed.len());
    for &v in diffed {
        let mut acc = v;
        for tail in tails.iter_mut().rev() {
            acc += *tail;
            *tail = acc;
        }
        out.push(acc);
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample autocorrelations (demeaned, denominator `n`) for lags `0..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::OutOfRange(format!(
            "max_lag {max_lag} must be below the series length {n}"
        )));
    }
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|v| v - m).collect();
    let c0: f64 = dev.iter().map(|v| v * v).sum();
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::Degenerate("autocorrelation of a constant series".into()));
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum::<f64>() / c0
            }
        })
        .collect())
}

/// Partial autocorrelations from an autocorrelation sequence by the
/// Durbin–Levinson recursion.
pub fn pacf_from_acf(acf: &[f64]) -> Vec<f64> {
    let max_lag = acf.len().saturating_sub(1);
    let mut pacf = vec![1.0; max_lag + 1];
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    for k in 1..=max_lag {
        let num = acf[k] - phi.iter().enumerate().map(|(j, p)| p * acf[k - 1 - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let next: Vec<f64> = (0..k - 1).map(|j| phi[j] - a * phi[k - 2 - j]).chain([a]).collect();
        phi = next;
        v *= 1.0 - a * a;
        pacf[k] = a;
    }
    pacf
}

pub fn correlogram(series: &[f64], max_lag: usize) -> Result<Correlogram> {
    if max_lag < 1 {
        return Err(Error::OutOfRange("max_lag must be at least 1".into()));
    }
    let acf = acf(series, max_lag)?;
    let pacf = pacf_from_acf(&acf);
    Ok(Correlogram {
        acf,
        pacf,
        n: series.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Portmanteau {
    #[default]
    BoxPierce,
    /// Small-sample corrected variant, `n(n+2) Σ r_k² / (n-k)`.
    LjungBox,
}

/// Portmanteau statistic from precomputed autocorrelations (`acf[0]` ignored).
/// Degrees of freedom are `lags - fitted_params`, floored at 1.
pub fn portmanteau_from_acf(
    acf: &[f64],
    n: usize,
    lags: usize,
    fitted_params: usize,
    kind: Portmanteau,
) -> Result<TestReport> {
    if lags < 1 || lags >= acf.len() {
        return Err(Error::OutOfRange(format!(
            "lags {lags} needs autocorrelations up to that lag ({} supplied)",
            acf.len().saturating_sub(1)
        )));
    }
    let nf = n as f64;
    let q = match kind {
        Portmanteau::BoxPierce => nf * acf[1..=lags].iter().map(|r| r * r).sum::<f64>(),
        Portmanteau::LjungBox => {
            nf * (nf + 2.0)
                * acf[1..=lags]
                    .iter()
                    .enumerate()
                    .map(|(i, r)| r * r / (nf - (i + 1) as f64))
                    .sum::<f64>()
        }
    };
    let dof = lags.saturating_sub(fitted_params).max(1);
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    Ok(TestReport::new(q, chi.sf(q), lags))
}

/// Portmanteau test for residual whiteness.
pub fn portmanteau(
    residuals: &[f64],
    lags: usize,
    fitted_params: usize,
    kind: Portmanteau,
) -> Result<TestReport> {
    let n = residuals.len();
    if lags < 1 || lags >= n {
        return Err(Error::OutOfRange(format!(
            "portmanteau lags {lags} must satisfy 1 <= lags < n = {n}"
        )));
    }
    let r = acf(residuals, lags)?;
    portmanteau_from_acf(&r, n, lags, fitted_params, kind)
}

/// Box–Pierce `Q = n Σ r_k²` with `lags` degrees of freedom.
pub fn box_pierce(residuals: &[f64], lags: usize) -> Result<TestReport> {
    portmanteau(residuals, lags, 0, Portmanteau::BoxPierce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_examples() {
        assert_eq!(difference(&[1.0, 3.0, 6.0, 10.0], 1).unwrap(), vec![2.0, 3.0, 4.0]);
        assert_eq!(difference(&[5.0; 4], 1).unwrap(), vec![0.0; 3]);
        assert_eq!(difference(&[1.0, 2.0, 4.0, 7.0], 2).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            difference(&[1.0, 2.0], 2),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn integrate_inverts_difference() {
        let y = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        for d in 0..3 {
            let dy = difference(&y, d).unwrap();
            let back = integrate(&dy[2..], &y[2..d + 2]);
            for (a, b) in back.iter().zip(&y[d + 2..]) {
                assert!((a - b).abs() < 1e-12, "d={d}");
            }
        }
    }

    #[test]
    fn acf_lag_zero_is_one_and_range_checked() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let c = correlogram(&x, 3).unwrap();
        assert_eq!(c.acf[0], 1.0);
        assert!(c.acf.iter().chain(&c.pacf).all(|r| r.abs() <= 1.0));
        assert!(matches!(correlogram(&x, 6), Err(Error::OutOfRange(_))));
        assert!(matches!(correlogram(&[2.0; 5], 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pacf_lag_one_equals_acf_lag_one() {
        let x = [0.3, -1.2, 0.8, 2.2, -0.4, 0.1, 1.7, -0.9, 0.5, 0.0];
        let c = correlogram(&x, 4).unwrap();
        assert!((c.pacf[1] - c.acf[1]).abs() < 1e-15);
    }

    #[test]
    fn box_pierce_arithmetic() {
        let mut r = vec![1.0, 0.3];
        r.extend([0.0; 9]);
        let rep = portmanteau_from_acf(&r, 100, 10, 0, Portmanteau::BoxPierce).unwrap();
        assert!((rep.statistic - 9.0).abs() < 1e-12);
        assert_eq!(rep.lags_used, 10);
    }

    #[test]
    fn box_pierce_lag_bounds() {
        let x: Vec<f64> = (0..10).map(|i| ((i * 7) % 5) as f64).collect();
        assert!(matches!(box_pierce(&x, 10), Err(Error::OutOfRange(_))));
        assert!(matches!(box_pierce(&x, 0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn price_series_invariants() {
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        assert!(PriceSeries::new(vec![d("2020-01-02"), d("2020-01-01")], vec![1.0, 2.0]).is_err());
        assert!(PriceSeries::new(vec![d("2020-01-01")], vec![f64::NAN]).is_err());
        assert!(PriceSeries::new(vec![d("2020-01-01")], vec![]).is_err());
        let s = PriceSeries::new(vec![d("2020-01-01"), d("2020-01-03")], vec![1.0, 2.0]).unwrap();
        assert_eq!(s.index_of(d("2020-01-03")), Some(1));
    }
}
