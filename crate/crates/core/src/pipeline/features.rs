//! Per-day fused inputs, the chronological split and input standardization.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::arima::ArimaModel;
use crate::error::{Error, Result};
use crate::events::{EventRecord, EventTypeVector, ARG_DIM, TYPE_DIM};
use crate::garch::GarchModel;
use crate::sentiment::SentimentVector;
use crate::timeseries::{difference, PriceSeries};

pub const PRICE_LAGS: usize = 20;
/// Width of the event-plus-price LSTM input.
pub const FEATURE_DIM: usize = TYPE_DIM + ARG_DIM + PRICE_LAGS;

/// Inputs for forecasting the close on `date`. Everything in a row is known
/// at the previous trading day's close: `price_lags[0]` is that close and the
/// news channels describe that day's cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub date: NaiveDate,
    pub type_vec: EventTypeVector,
    pub arg_embedding: Vec<f64>,
    /// Most recent first.
    pub price_lags: Vec<f64>,
    pub sentiment: SentimentVector,
    pub arima_mean: f64,
    pub garch_var: f64,
}

impl FeatureRow {
    /// `type_vec ‖ arg_embedding ‖ price_lags`.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(FEATURE_DIM);
        v.extend_from_slice(self.type_vec.as_slice());
        v.extend_from_slice(&self.arg_embedding);
        v.extend_from_slice(&self.price_lags);
        v
    }

    pub fn last_price(&self) -> f64 {
        self.price_lags[0]
    }
}

/// First trading day on or after `date`, or `None` past the last one.
pub fn align_to_trading_day(trading: &[NaiveDate], date: NaiveDate) -> Option<NaiveDate> {
    let i = trading.partition_point(|d| *d < date);
    trading.get(i).copied()
}

fn check_keys<T>(prices: &PriceSeries, what: &str, map: &BTreeMap<NaiveDate, T>) -> Result<()> {
    let bad: Vec<String> = map
        .keys()
        .filter(|d| prices.index_of(**d).is_none())
        .map(|d| d.to_string())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} dated on non-trading days: {}",
            bad.join(", ")
        )))
    }
}

/// One row for every price index `t ≥ PRICE_LAGS`. Sentiment and events are
/// keyed by trading day; days without news get a neutral sentiment and padded
/// events. The ARIMA mean is the one-step forecast of `y_t` from the fitted
/// parameters and the GARCH variance is the conditional variance of the
/// corresponding ARIMA residual.
pub fn build_features(
    prices: &PriceSeries,
    sentiments: &BTreeMap<NaiveDate, SentimentVector>,
    events: &BTreeMap<NaiveDate, EventRecord>,
    arima: &ArimaModel,
    garch: &GarchModel,
) -> Result<Vec<FeatureRow>> {
    let n = prices.len();
    if n <= PRICE_LAGS {
        return Err(Error::InsufficientData {
            what: "feature rows",
            needed: PRICE_LAGS + 1,
            got: n,
        });
    }
    check_keys(prices, "sentiment", sentiments)?;
    check_keys(prices, "events", events)?;
    let y = prices.values();
    let d = arima.spec.d;
    let means = arima.one_step_predictions(y, PRICE_LAGS)?;
    let resid = arima.residuals_for(&difference(y, d)?);
    let vars = garch.conditional_variances(&resid);
    let dates = prices.dates();
    let mut rows = Vec::with_capacity(n - PRICE_LAGS);
    for t in PRICE_LAGS..n {
        let news_day = dates[t - 1];
        let rec = events.get(&news_day);
        rows.push(FeatureRow {
            date: dates[t],
            type_vec: rec.map_or_else(EventTypeVector::zeros, |r| r.type_vec.clone()),
            arg_embedding: rec.map_or_else(|| vec![0.0; ARG_DIM], |r| r.arg_embedding.clone()),
            price_lags: (1..=PRICE_LAGS).map(|k| y[t - k]).collect(),
            sentiment: sentiments.get(&news_day).copied().unwrap_or(SentimentVector::NEUTRAL),
            arima_mean: means[t - PRICE_LAGS],
            garch_var: vars[t - d].max(0.0),
        });
    }
    Ok(rows)
}

/// Chronological split over observation indices: `[0, train_end)` trains,
/// `[train_end, val_end)` validates and `[val_end, test_end)` tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_end_index: usize,
    pub val_end_index: usize,
    pub test_end_index: usize,
}

impl SplitPlan {
    /// `train_ratio` of the observations go to training plus validation, of
    /// which the last `val_fraction` validate. Sizes are floored.
    pub fn new(n: usize, train_ratio: f64, val_fraction: f64) -> Result<Self> {
        if !(0.0 < train_ratio && train_ratio < 1.0 && 0.0 < val_fraction && val_fraction < 1.0) {
            return Err(Error::OutOfRange(format!(
                "split ratios must lie in (0, 1), got {train_ratio} and {val_fraction}"
            )));
        }
        let floor = |x: f64| (x + 1e-9).floor() as usize;
        let fit_end = floor(n as f64 * train_ratio);
        let train_end = floor(fit_end as f64 * (1.0 - val_fraction));
        if train_end == 0 || train_end >= fit_end || fit_end >= n {
            return Err(Error::InsufficientData {
                what: "three-way split",
                needed: 10,
                got: n,
            });
        }
        Ok(SplitPlan {
            train_end_index: train_end,
            val_end_index: fit_end,
            test_end_index: n,
        })
    }

    pub fn train_len(&self) -> usize {
        self.train_end_index
    }

    pub fn val_len(&self) -> usize {
        self.val_end_index - self.train_end_index
    }

    pub fn test_len(&self) -> usize {
        self.test_end_index - self.val_end_index
    }

    /// The same split expressed over feature rows, which start at price
    /// index [`PRICE_LAGS`].
    pub fn row_ranges(&self) -> [std::ops::Range<usize>; 3] {
        let r = |i: usize| i.saturating_sub(PRICE_LAGS);
        [
            0..r(self.train_end_index),
            r(self.train_end_index)..r(self.val_end_index),
            r(self.val_end_index)..r(self.test_end_index),
        ]
    }
}

/// Column-wise z-scoring fitted on a set of rows. Constant columns are only
/// centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InsufficientData {
                what: "standardizer",
                needed: 1,
                got: 0,
            });
        };
        let dim = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-12 { v.sqrt() } else { 1.0 })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Input channels an LSTM variant sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channels {
    pub events: bool,
    pub sentiment: bool,
}

impl Channels {
    pub const LAGS: Channels = Channels {
        events: false,
        sentiment: false,
    };

    pub fn dim(&self) -> usize {
        PRICE_LAGS + if self.events { TYPE_DIM + ARG_DIM } else { 0 } + if self.sentiment { 4 } else { 0 }
    }

    /// Unscaled input vector. Lags enter as the latest close followed by the
    /// 19 successive differences, so the level and the recent moves are
    /// separate columns.
    pub fn raw(&self, row: &FeatureRow) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        if self.events {
            v.extend_from_slice(row.type_vec.as_slice());
            v.extend_from_slice(&row.arg_embedding);
        }
        v.push(row.price_lags[0]);
        v.extend(row.price_lags.windows(2).map(|w| w[0] - w[1]));
        if self.sentiment {
            v.extend_from_slice(&row.sentiment.to_array());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let s = SplitPlan::new(3522, 0.8, 0.1).unwrap();
        assert_eq!((s.train_len(), s.val_len(), s.test_len()), (2535, 282, 705));
        let s = SplitPlan::new(2000, 0.8, 0.1).unwrap();
        assert_eq!((s.train_len(), s.val_len(), s.test_len()), (1440, 160, 400));
        assert!(SplitPlan::new(2, 0.8, 0.1).is_err());
        assert!(SplitPlan::new(100, 1.2, 0.1).is_err());
    }

    #[test]
    fn trading_day_alignment() {
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        let trading = [d("2020-01-03"), d("2020-01-06")];
        assert_eq!(align_to_trading_day(&trading, d("2020-01-04")), Some(d("2020-01-06")));
        assert_eq!(align_to_trading_day(&trading, d("2020-01-03")), Some(d("2020-01-03")));
        assert_eq!(align_to_trading_day(&trading, d("2020-01-07")), None);
    }

    #[test]
    fn standardizer_centres_constant_columns() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.apply(&[3.0, 5.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn channel_widths() {
        assert_eq!(Channels::LAGS.dim(), 20);
        assert_eq!(Channels { events: true, sentiment: false }.dim(), FEATURE_DIM);
        assert_eq!(FEATURE_DIM, 320);
    }
}
