#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn stat_oracles() -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture("stat_oracles.json")).unwrap()).unwrap()
}

pub fn series(doc: &Value, name: &str) -> Vec<f64> {
    doc["series"][name]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

/// ARMA(p, q) simulation straight from the defining recursion, after a burn-in.
pub fn simulate_arma(c: f64, ar: &[f64], ma: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let burn = 500;
    let e = normals(n + burn, seed);
    let mut x = vec![0.0; n + burn];
    for t in 0..n + burn {
        let mut v = c + e[t];
        for (i, a) in ar.iter().enumerate() {
            if t > i {
                v += a * x[t - 1 - i];
            }
        }
        for (j, th) in ma.iter().enumerate() {
            if t > j {
                v += th * e[t - 1 - j];
            }
        }
        x[t] = v;
    }
    x.split_off(burn)
}

pub fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut level = 50.0;
    normals(n, seed)
        .into_iter()
        .map(|e| {
            level += e;
            level
        })
        .collect()
}

/// Random price path and noisy predictions, occasionally exact.
pub fn random_pair(rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(1..60);
    let mut level = rng.random_range(20.0..120.0);
    let actual: Vec<f64> = (0..n)
        .map(|_| {
            level += rng.random_range(-3.0..3.0);
            level
        })
        .collect();
    let pred = actual
        .iter()
        .map(|a| {
            // Some exact hits so ties in the direction products occur.
            if rng.random_bool(0.1) {
                *a
            } else {
                a + rng.random_range(-4.0..4.0)
            }
        })
        .collect();
    (actual, pred)
}

pub fn brute_rmse(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - p[i]).powi(2);
    }
    (s / y.len() as f64).sqrt()
}

pub fn brute_mape(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += ((y[i] - p[i]) / y[i]).abs();
    }
    s / y.len() as f64
}

pub fn brute_ds(y: &[f64], p: &[f64], conventional: bool) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let mut hits = 0usize;
    for t in 0..y.len() - 1 {
        let alpha = if conventional {
            (p[t + 1] - y[t]) * (y[t + 1] - y[t]) >= 0.0
        } else {
            (y[t + 1] - y[t]) * (y[t + 1] - p[t + 1]) >= 0.0
        };
        if alpha {
            hits += 1;
        }
    }
    hits as f64 / (y.len() - 1) as f64
}

pub fn brute_dm(a: &[f64], b: &[f64], h: usize) -> f64 {
    let n = a.len();
    let d: Vec<f64> = (0..n).map(|i| a[i] - b[i]).collect();
    let mut mean = 0.0;
    for v in &d {
        mean += v;
    }
    mean /= n as f64;
    let mut lrv = 0.0;
    for k in 0..h {
        let mut g = 0.0;
        for t in k..n {
            g += (d[t] - mean) * (d[t - k] - mean);
        }
        g /= n as f64;
        lrv += if k == 0 { g } else { 2.0 * g };
    }
    mean / (lrv / n as f64).sqrt()
}

