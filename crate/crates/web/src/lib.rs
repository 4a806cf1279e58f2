//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export has a plain Rust counterpart so it can be tested natively.

use std::sync::OnceLock;

use oilcast::arima::{self, ArimaSpec};
use oilcast::garch::GarchModel;
use oilcast::sentiment::{score_text, SentimentLexicon};
use oilcast::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_HORIZON: usize = 500;

fn lexicon() -> &'static SentimentLexicon {
    static LEX: OnceLock<SentimentLexicon> = OnceLock::new();
    LEX.get_or_init(SentimentLexicon::default)
}

/// `[neg, neu, pos, compound]` for one text.
pub fn sentiment(text: &str) -> [f64; 4] {
    score_text(text, lexicon()).to_array()
}

/// Variance forecasts for `1..=horizon` steps from the last residual and
/// conditional variance.
pub fn variance_curve(
    alpha0: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    last_resid: f64,
    last_sigma2: f64,
    horizon: usize,
) -> Result<Vec<f64>> {
    check_horizon(horizon)?;
    let model = GarchModel::new(alpha0, alpha, beta)?;
    model.forecast_variance(&[last_resid * last_resid], &[last_sigma2], horizon)
}

#[derive(Debug, Serialize)]
pub struct ArimaForecast {
    pub order: [usize; 3],
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub aic: f64,
    pub bic: f64,
    pub forecast: Vec<f64>,
}

/// Numbers separated by commas, whitespace or semicolons.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::OutOfRange(format!("series item {}: not a number: {t:?}", i + 1))),
        })
        .collect()
}

/// Fits ARIMA to `series` and forecasts `horizon` levels. `order = None`
/// selects the order automatically.
pub fn arima_forecast(series: &[f64], order: Option<[usize; 3]>, horizon: usize) -> Result<ArimaForecast> {
    check_horizon(horizon)?;
    let spec = match order {
        Some([p, d, q]) => ArimaSpec::new(p, d, q),
        None => arima::select_order(series, 3, 3),
    };
    let model = arima::fit(series, spec)?;
    let forecast = model.forecast(series, horizon)?;
    Ok(ArimaForecast {
        order: [spec.p, spec.d, spec.q],
        intercept: model.intercept,
        ar: model.ar_coeffs,
        ma: model.ma_coeffs,
        sigma2: model.sigma2,
        aic: model.aic,
        bic: model.bic,
        forecast,
    })
}

fn check_horizon(horizon: usize) -> Result<()> {
    if (1..=MAX_HORIZON).contains(&horizon) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("horizon must be in 1..={MAX_HORIZON}")))
    }
}

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = scoreSentiment)]
pub fn score_sentiment(text: &str) -> Vec<f64> {
    sentiment(text).to_vec()
}

#[wasm_bindgen(js_name = garchVarianceCurve)]
pub fn garch_variance_curve(
    alpha0: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    last_resid: f64,
    last_sigma2: f64,
    horizon: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    variance_curve(alpha0, alpha, beta, last_resid, last_sigma2, horizon).map_err(js_err)
}

/// Returns the fit and forecast as a JSON string. Negative `p` means
/// automatic order selection.
#[wasm_bindgen(js_name = arimaForecast)]
pub fn arima_forecast_json(series: &str, p: i32, d: u32, q: u32, horizon: usize) -> std::result::Result<String, JsError> {
    let values = parse_series(series).map_err(js_err)?;
    let order = (p >= 0).then_some([p as usize, d as usize, q as usize]);
    let fc = arima_forecast(&values, order, horizon).map_err(js_err)?;
    serde_json::to_string(&fc).map_err(|e| JsError::new(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_matches_core() {
        let s = sentiment("Oil prices surged on strong demand");
        assert!(s[3] > 0.0);
        assert!((s[0] + s[1] + s[2] - 1.0).abs() < 1e-9);
        assert_eq!(sentiment(""), [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn variance_curve_tends_to_unconditional() {
        let v = variance_curve(0.1, vec![0.1], vec![0.8], 3.0, 2.0, 200).unwrap();
        assert!((v[0] - (0.1 + 0.1 * 9.0 + 0.8 * 2.0)).abs() < 1e-12);
        assert!((v[199] - 1.0).abs() < 1e-6);
        assert!(variance_curve(0.1, vec![0.1], vec![0.8], 1.0, 1.0, 0).is_err());
        assert!(variance_curve(-0.1, vec![0.1], vec![0.8], 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn parses_mixed_separators() {
        assert_eq!(parse_series("1, 2;3\n4.5 ").unwrap(), vec![1.0, 2.0, 3.0, 4.5]);
        let err = parse_series("1 x 3").unwrap_err().to_string();
        assert!(err.contains("x"), "{err}");
    }

    #[test]
    fn arima_forecast_on_a_trend() {
        let series: Vec<f64> = (0..120).map(|i| 50.0 + 0.3 * i as f64 + (i as f64 * 1.7).sin()).collect();
        let fc = arima_forecast(&series, Some([1, 1, 0]), 5).unwrap();
        assert_eq!(fc.order, [1, 1, 0]);
        assert_eq!(fc.forecast.len(), 5);
        assert!(fc.forecast.iter().all(|v| (80.0..95.0).contains(v)), "{:?}", fc.forecast);
        let auto = arima_forecast(&series, None, 3).unwrap();
        assert_eq!(auto.forecast.len(), 3);
        assert!(arima_forecast(&series[..3], Some([1, 1, 1]), 3).is_err());
    }
}
