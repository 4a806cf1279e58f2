//! Point-forecast accuracy and the Diebold-Mariano comparison.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::timeseries::TestReport;

/// Minimum sample size for [`dm_test`].
pub const DM_MIN_LEN: usize = 10;

/// Which product defines a directional hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsConvention {
    /// `(y_{t+1} − y_t)(y_{t+1} − ŷ_{t+1}) ≥ 0`.
    #[default]
    AsWritten,
    /// `(ŷ_{t+1} − y_t)(y_{t+1} − y_t) ≥ 0`.
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    /// Mean absolute percentage error as a fraction.
    pub mape: f64,
    pub ds: f64,
    pub n: usize,
}

fn check_lengths(actuals: &[f64], predictions: &[f64]) -> Result<()> {
    if actuals.is_empty() {
        return Err(Error::InsufficientData {
            what: "point metrics",
            needed: 1,
            got: 0,
        });
    }
    if actuals.len() != predictions.len() {
        return Err(Error::DimensionMismatch {
            what: "predictions",
            expected: actuals.len(),
            got: predictions.len(),
        });
    }
    if actuals.iter().chain(predictions).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point metrics input".into()));
    }
    Ok(())
}

pub fn rmse(actuals: &[f64], predictions: &[f64]) -> Result<f64> {
    check_lengths(actuals, predictions)?;
    let sse: f64 = actuals.iter().zip(predictions).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((sse / actuals.len() as f64).sqrt())
}

pub fn mape(actuals: &[f64], predictions: &[f64]) -> Result<f64> {
    check_lengths(actuals, predictions)?;
    if let Some(i) = actuals.iter().position(|a| *a == 0.0) {
        return Err(Error::OutOfRange(format!("MAPE undefined: actual value at index {i} is zero")));
    }
    let s: f64 = actuals.iter().zip(predictions).map(|(a, p)| ((a - p) / a).abs()).sum();
    Ok(s / actuals.len() as f64)
}

/// Share of consecutive pairs counted as directional hits; 0 when there is
/// only one observation.
pub fn directional_symmetry(actuals: &[f64], predictions: &[f64], convention: DsConvention) -> Result<f64> {
    check_lengths(actuals, predictions)?;
    let n = actuals.len();
    if n < 2 {
        return Ok(0.0);
    }
    let hits = (0..n - 1)
        .filter(|&t| {
            let (y0, y1, p1) = (actuals[t], actuals[t + 1], predictions[t + 1]);
            match convention {
                DsConvention::AsWritten => (y1 - y0) * (y1 - p1) >= 0.0,
                DsConvention::Conventional => (p1 - y0) * (y1 - y0) >= 0.0,
            }
        })
        .count();
    Ok(hits as f64 / (n - 1) as f64)
}

pub fn point_metrics(actuals: &[f64], predictions: &[f64], convention: DsConvention) -> Result<EvalReport> {
    Ok(EvalReport {
        rmse: rmse(actuals, predictions)?,
        mape: mape(actuals, predictions)?,
        ds: directional_symmetry(actuals, predictions, convention)?,
        n: actuals.len(),
    })
}

pub fn squared_errors(actuals: &[f64], predictions: &[f64]) -> Vec<f64> {
    actuals.iter().zip(predictions).map(|(a, p)| (a - p) * (a - p)).collect()
}

/// Diebold-Mariano test of equal predictive accuracy on loss sequences
/// `a` and `b`. The long-run variance of `d = a − b` uses autocovariances up
/// to lag `horizon − 1`; the p-value is two-sided under the standard normal.
/// A positive statistic means `a` has the larger mean loss.
pub fn dm_test(a: &[f64], b: &[f64], horizon: usize) -> Result<TestReport> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "loss sequences",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < DM_MIN_LEN {
        return Err(Error::InsufficientData {
            what: "Diebold-Mariano test",
            needed: DM_MIN_LEN,
            got: a.len(),
        });
    }
    if horizon == 0 || horizon >= a.len() {
        return Err(Error::OutOfRange(format!("DM horizon must be in 1..{}, got {horizon}", a.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("DM loss sequence".into()));
    }
    let lags = horizon - 1;
    if a == b {
        return Ok(TestReport::new(0.0, 1.0, lags));
    }
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let gamma = |k: usize| (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n as f64;
    let lrv = gamma(0) + 2.0 * (1..horizon).map(gamma).sum::<f64>();
    let var = lrv / n as f64;
    if var <= 0.0 {
        if mean == 0.0 {
            return Ok(TestReport::new(0.0, 1.0, lags));
        }
        return Err(Error::Degenerate(format!(
            "loss differential has mean {mean:.6e} but non-positive long-run variance"
        )));
    }
    let stat = mean / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * (1.0 - normal.cdf(stat.abs()))).clamp(0.0, 1.0);
    Ok(TestReport::new(stat, p, lags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast() {
        let r = point_metrics(&[1.0, 2.0], &[1.0, 2.0], DsConvention::AsWritten).unwrap();
        assert_eq!((r.rmse, r.mape), (0.0, 0.0));
    }

    #[test]
    fn single_mape() {
        assert_eq!(mape(&[2.0], &[1.0]).unwrap(), 0.5);
        assert!(mape(&[0.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn ds_as_written() {
        assert_eq!(directional_symmetry(&[1.0, 2.0], &[9.0, 1.5], DsConvention::AsWritten).unwrap(), 1.0);
        assert_eq!(directional_symmetry(&[1.0, 2.0], &[9.0, 2.5], DsConvention::AsWritten).unwrap(), 0.0);
        assert_eq!(directional_symmetry(&[1.0, 2.0], &[9.0, 2.5], DsConvention::Conventional).unwrap(), 1.0);
        assert_eq!(directional_symmetry(&[1.0], &[1.0], DsConvention::AsWritten).unwrap(), 0.0);
    }

    #[test]
    fn dm_self_and_short() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64).sin().abs()).collect();
        let r = dm_test(&a, &a, 1).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert!(dm_test(&a[..3], &a[..3], 1).is_err());
    }

    #[test]
    fn dm_constant_shift_is_degenerate() {
        let a = vec![1.0; 20];
        let b = vec![2.0; 20];
        assert!(matches!(dm_test(&a, &b, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn dm_sign_follows_larger_loss() {
        let b: Vec<f64> = (0..50).map(|i| 1.0 + (i as f64 * 0.7).sin().abs()).collect();
        let a: Vec<f64> = b.iter().map(|x| 2.0 * x).collect();
        let r = dm_test(&a, &b, 2).unwrap();
        assert!(r.statistic > 0.0 && r.p_value < 0.01);
        assert_eq!(r.lags_used, 1);
    }
}
