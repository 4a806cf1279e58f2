//! Diagnostics checked against frozen reference-package outputs
//! (`scripts/make_stat_oracles.py`) and simulation oracles.

mod common;

use common::{normals, series, simulate_arma, stat_oracles};
use oilcast::garch::lm_arch_test;
use oilcast::timeseries::{adf_test, box_pierce, correlogram, difference, portmanteau, Portmanteau};
use proptest::prelude::*;

#[test]
fn adf_matches_reference_package() {
    let doc = stat_oracles();
    for name in ["random_walk", "white_noise", "ar1_phi09"] {
        let x = series(&doc, name);
        let want = &doc["adf"][name];
        let max_lag = want["max_lag"].as_u64().unwrap() as usize;
        let rep = adf_test(&x, max_lag).unwrap();
        assert_eq!(rep.lags_used as u64, want["used_lag"].as_u64().unwrap(), "{name}");
        let stat = want["statistic"].as_f64().unwrap();
        assert!((rep.statistic - stat).abs() < 1e-8, "{name}: {} vs {stat}", rep.statistic);
        let p = want["p_value"].as_f64().unwrap();
        assert!((rep.p_value - p).abs() < 1e-8, "{name}: {} vs {p}", rep.p_value);
    }
}

#[test]
fn adf_decisions_on_seeded_series() {
    let doc = stat_oracles();
    let rw = adf_test(&series(&doc, "random_walk"), 17).unwrap();
    assert!(!rw.reject_at_5pct);
    let wn = adf_test(&series(&doc, "white_noise"), 17).unwrap();
    assert!(wn.reject_at_5pct);
    assert!(adf_test(&[1.0, 2.0, 1.0, 3.0, 2.0], 1).is_err());
}

#[test]
fn correlogram_matches_reference_package() {
    let doc = stat_oracles();
    let x = series(&doc, "ar1_phi09");
    let c = correlogram(&x, 10).unwrap();
    let want = &doc["correlogram"]["ar1_phi09"];
    for k in 0..=10 {
        let a = want["acf"][k].as_f64().unwrap();
        let p = want["pacf"][k].as_f64().unwrap();
        assert!((c.acf[k] - a).abs() < 1e-10, "acf lag {k}");
        assert!((c.pacf[k] - p).abs() < 1e-10, "pacf lag {k}");
    }
}

#[test]
fn ar1_acf_decays_geometrically() {
    let x = simulate_arma(0.0, &[0.5], &[], 5000, 11);
    let c = correlogram(&x, 5).unwrap();
    for k in 1..=5 {
        assert!((c.acf[k] - 0.5f64.powi(k as i32)).abs() < 0.05, "lag {k}: {}", c.acf[k]);
    }
}

#[test]
fn portmanteau_matches_reference_package() {
    let doc = stat_oracles();
    for name in ["iid_1000", "ar1_phi09"] {
        let x = series(&doc, name);
        let want = &doc["portmanteau"][name];
        let bp = box_pierce(&x, 10).unwrap();
        let lb = portmanteau(&x, 10, 0, Portmanteau::LjungBox).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(bp.statistic, want["bp_stat"].as_f64().unwrap()) < 1e-9);
        assert!(rel(lb.statistic, want["lb_stat"].as_f64().unwrap()) < 1e-9);
        assert!((bp.p_value - want["bp_pvalue"].as_f64().unwrap()).abs() < 1e-9);
        assert!((lb.p_value - want["lb_pvalue"].as_f64().unwrap()).abs() < 1e-9);
    }
    let iid = box_pierce(&series(&doc, "iid_1000"), 10).unwrap();
    assert!(iid.p_value > 0.05);
    let ar = box_pierce(&series(&doc, "ar1_phi09"), 10).unwrap();
    assert!(ar.p_value < 0.01);
}

#[test]
fn arch_lm_matches_reference_package() {
    let doc = stat_oracles();
    for (name, reject) in [("garch11", true), ("iid_2000", false)] {
        let x = series(&doc, name);
        let want = &doc["arch_lm"][name];
        let rep = lm_arch_test(&x, 5).unwrap();
        assert!((rep.statistic - want["lm"].as_f64().unwrap()).abs() < 1e-7, "{name}");
        assert_eq!(rep.reject_at_5pct, reject, "{name}");
    }
}

#[test]
fn fitted_params_reduce_portmanteau_dof() {
    let x = normals(300, 5);
    let full = portmanteau(&x, 10, 0, Portmanteau::BoxPierce).unwrap();
    let adj = portmanteau(&x, 10, 2, Portmanteau::BoxPierce).unwrap();
    assert_eq!(full.statistic, adj.statistic);
    assert!(adj.p_value < full.p_value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn difference_is_linear(
        x in prop::collection::vec(-100.0f64..100.0, 3..40),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        seed in 0u64..1000,
    ) {
        let y: Vec<f64> = normals(x.len(), seed);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = difference(&combo, 1).unwrap();
        let dx = difference(&x, 1).unwrap();
        let dy = difference(&y, 1).unwrap();
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (a * dx[i] + b * dy[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn correlogram_affine_invariant(seed in 0u64..1000, a in 0.01f64..50.0, b in -100.0f64..100.0) {
        let x = normals(80, seed);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let cx = correlogram(&x, 8).unwrap();
        let cy = correlogram(&y, 8).unwrap();
        for k in 0..=8 {
            prop_assert!((cx.acf[k] - cy.acf[k]).abs() < 1e-9);
            prop_assert!((cx.pacf[k] - cy.pacf[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn box_pierce_nonnegative_and_monotone(seed in 0u64..1000) {
        let x = normals(60, seed);
        let mut prev = 0.0;
        for lags in 1..20 {
            let q = box_pierce(&x, lags).unwrap().statistic;
            prop_assert!(q >= 0.0);
            prop_assert!(q + 1e-12 >= prev);
            prev = q;
        }
    }
}
