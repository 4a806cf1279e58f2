mod common;

use common::{normals, random_walk, simulate_arma};
use oilcast::arima::{fit, rolling_forecast, select_order, ArimaModel, ArimaSpec};
use oilcast::document;

#[test]
fn ar1_recovery() {
    let x = simulate_arma(0.0, &[0.6], &[], 2000, 101);
    let m = fit(&x, ArimaSpec::new(1, 0, 0)).unwrap();
    assert!((0.5..=0.7).contains(&m.ar_coeffs[0]), "{:?}", m.ar_coeffs);
    assert!(m.is_stationary_invertible());
    assert_eq!(m.residuals.len(), x.len());
}

#[test]
fn ma1_recovery() {
    let x = simulate_arma(0.0, &[], &[0.4], 2000, 102);
    let m = fit(&x, ArimaSpec::new(0, 0, 1)).unwrap();
    assert!((0.3..=0.5).contains(&m.ma_coeffs[0]), "{:?}", m.ma_coeffs);
}

#[test]
fn arma11_within_two_standard_errors() {
    let mut hits = 0;
    for seed in 0..5 {
        let x = simulate_arma(0.5, &[0.5], &[0.3], 1500, 200 + seed);
        let m = fit(&x, ArimaSpec::new(1, 0, 1)).unwrap();
        let ok_ar = (m.ar_coeffs[0] - 0.5).abs() <= 2.0 * m.std_errors[1];
        let ok_ma = (m.ma_coeffs[0] - 0.3).abs() <= 2.0 * m.std_errors[2];
        hits += usize::from(ok_ar && ok_ma);
    }
    assert!(hits >= 4, "{hits}/5");
}

#[test]
fn residual_mean_vanishes() {
    let x = simulate_arma(1.0, &[0.4], &[], 3000, 7);
    let m = fit(&x, ArimaSpec::new(1, 0, 0)).unwrap();
    let mean = m.residuals.iter().sum::<f64>() / m.residuals.len() as f64;
    assert!(mean.abs() < 3.0 * (m.sigma2 / x.len() as f64).sqrt(), "{mean}");
}

#[test]
fn select_order_on_ar2() {
    let x = simulate_arma(0.0, &[0.5, 0.3], &[], 1000, 31);
    let spec = select_order(&x, 3, 3);
    assert_eq!(spec.d, 0);
    assert!((1..=3).contains(&spec.p), "{spec}");
}

#[test]
fn select_order_on_random_walk_and_noise() {
    assert_eq!(select_order(&random_walk(500, 32), 2, 2).d, 1);
    let wn = select_order(&normals(500, 33), 2, 2);
    assert_eq!((wn.p, wn.d, wn.q), (0, 0, 0));
    assert!(wn.is_intercept_only());
}

#[test]
fn forecasts_invariant_to_level_shift_when_differenced() {
    let x = random_walk(400, 41);
    let shifted: Vec<f64> = x.iter().map(|v| v + 123.0).collect();
    let m = fit(&x, ArimaSpec::new(1, 1, 1)).unwrap();
    let a = m.one_step_predictions(&x, 350).unwrap();
    let b = m.one_step_predictions(&shifted, 350).unwrap();
    for (u, v) in a.iter().zip(&b) {
        assert!((u + 123.0 - v).abs() < 1e-9);
    }
    let fa = m.forecast(&x, 3).unwrap();
    let fb = m.forecast(&shifted, 3).unwrap();
    for (u, v) in fa.iter().zip(&fb) {
        assert!((u + 123.0 - v).abs() < 1e-9);
    }
}

#[test]
fn rolling_forecast_covers_tail() {
    let x = random_walk(300, 42);
    let r = rolling_forecast(&x, ArimaSpec::new(1, 1, 0), 200, 20).unwrap();
    assert_eq!(r.predictions.len(), 100);
    assert_eq!(r.refits, 5);
    let direct = r.last_model.one_step_predictions(&x, 280).unwrap();
    for (a, b) in direct.iter().zip(&r.predictions[80..]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn model_document_round_trip() {
    let x = simulate_arma(0.0, &[0.6], &[], 500, 5);
    let m = fit(&x, ArimaSpec::new(1, 0, 0)).unwrap();
    let json = document::to_json(&m, Some(9)).unwrap();
    let (back, seed): (ArimaModel, _) = document::from_json(&json).unwrap();
    assert_eq!(seed, Some(9));
    assert_eq!(back.ar_coeffs, m.ar_coeffs);
    assert_eq!(back.spec, m.spec);
}

#[test]
fn short_or_constant_series_rejected() {
    assert!(fit(&[], ArimaSpec::new(1, 0, 0)).is_err());
    assert!(fit(&[3.0; 200], ArimaSpec::new(1, 0, 0)).is_err());
    assert!(fit(&normals(15, 1), ArimaSpec::new(1, 0, 1)).is_err());
}
