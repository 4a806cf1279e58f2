mod common;

use common::{brute_dm, brute_ds, brute_mape, brute_rmse, random_pair};
use oilcast::pipeline::{directional_symmetry, dm_test, mape, point_metrics, rmse, DsConvention};
use oilcast::Error;
use rand::Rng;
use serde_json::Value;

#[test]
fn point_metrics_match_brute_force_on_1000_sequences() {
    let mut rng = common::rng(101);
    for _ in 0..1000 {
        let (y, p) = random_pair(&mut rng);
        let r = point_metrics(&y, &p, DsConvention::AsWritten).unwrap();
        assert!((r.rmse - brute_rmse(&y, &p)).abs() <= 1e-10);
        assert!((r.mape - brute_mape(&y, &p)).abs() <= 1e-10);
        assert!((r.ds - brute_ds(&y, &p, false)).abs() <= 1e-10);
        let c = directional_symmetry(&y, &p, DsConvention::Conventional).unwrap();
        assert!((c - brute_ds(&y, &p, true)).abs() <= 1e-10);
        assert!(r.rmse >= 0.0 && (0.0..=1.0).contains(&r.ds));
        assert_eq!(r.n, y.len());
    }
}

#[test]
fn dm_matches_brute_force_on_1000_sequences() {
    let mut rng = common::rng(202);
    for _ in 0..1000 {
        let n = rng.random_range(10..200);
        let h = rng.random_range(1..4);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0f64).powi(2)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0f64).powi(2)).collect();
        let lrv_positive = {
            let s = brute_dm(&a, &b, h);
            s.is_finite()
        };
        match dm_test(&a, &b, h) {
            Ok(r) => {
                let s = brute_dm(&a, &b, h);
                assert!((r.statistic - s).abs() <= 1e-10 * s.abs().max(1.0), "{} vs {s}", r.statistic);
                assert!((0.0..=1.0).contains(&r.p_value));
                assert_eq!(r.lags_used, h - 1);
            }
            Err(Error::Degenerate(_)) => assert!(!lrv_positive),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn dm_matches_frozen_reference() {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(common::fixture("dm_oracle.json")).unwrap()).unwrap();
    let f = |v: &Value| -> Vec<f64> { v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect() };
    for case in doc["cases"].as_array().unwrap() {
        let a = f(&case["a"]);
        let b = f(&case["b"]);
        let h = case["horizon"].as_u64().unwrap() as usize;
        let r = dm_test(&a, &b, h).unwrap();
        let s = case["statistic"].as_f64().unwrap();
        let p = case["p_value"].as_f64().unwrap();
        let name = case["name"].as_str().unwrap();
        assert!((r.statistic - s).abs() <= 1e-10 * s.abs().max(1.0), "{name}: {} vs {s}", r.statistic);
        assert!((r.p_value - p).abs() <= 1e-10, "{name}: {} vs {p}", r.p_value);
        if name == "half_losses_n500" {
            assert!(r.p_value < 0.01);
            assert!(r.statistic < 0.0);
        }
    }
}

#[test]
fn dm_self_comparison_is_null() {
    let mut rng = common::rng(303);
    for _ in 0..100 {
        let n = rng.random_range(10..100);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..9.0)).collect();
        let r = dm_test(&a, &a, rng.random_range(1..5)).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }
}

#[test]
fn documented_examples() {
    assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert_eq!(mape(&[2.0], &[1.0]).unwrap(), 0.5);
    assert_eq!(directional_symmetry(&[1.0, 2.0], &[0.0, 1.5], DsConvention::AsWritten).unwrap(), 1.0);
    assert!(matches!(mape(&[0.0, 1.0], &[1.0, 1.0]), Err(Error::OutOfRange(_))));
    assert!(dm_test(&[1.0; 3], &[2.0; 3], 1).is_err());
    assert!(rmse(&[], &[]).is_err());
    assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
}
