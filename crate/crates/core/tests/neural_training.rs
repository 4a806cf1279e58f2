mod common;

use common::rng;
use oilcast::neural::{lstm_backward, lstm_forward, Activation, AdamState, LstmRegressor, MlpHead};
use rand::Rng;

fn batch(n: usize, len: usize, dim: usize, seed: u64) -> (Vec<Vec<Vec<f64>>>, Vec<f64>) {
    let mut r = rng(seed);
    let xs: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| (0..len).map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()).collect())
        .collect();
    let ys = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    (xs, ys)
}

fn lstm_loss(m: &LstmRegressor, xs: &[Vec<Vec<f64>>], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(x, y)| (m.predict(x).unwrap() - y).powi(2)).sum::<f64>() / ys.len() as f64
}

#[test]
fn lstm_memorizes_ten_samples() {
    let (xs, ys) = batch(10, 5, 4, 3);
    let mut model = LstmRegressor::new(4, 8, &mut rng(4));
    let mut adam = AdamState::new(model.n_params(), 0.01, 0.9, 0.999).unwrap();
    let initial = lstm_loss(&model, &xs, &ys);
    let mut step = 0;
    while step < 5000 {
        let mut grads = vec![0.0; model.n_params()];
        for (x, y) in xs.iter().zip(&ys) {
            let (p, cache) = lstm_forward(&model, x).unwrap();
            let g = lstm_backward(&model, &cache, 2.0 * (p - y) / ys.len() as f64).unwrap();
            grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        adam.step(model.params_mut(), &grads).unwrap();
        step += 1;
        if step % 100 == 0 && lstm_loss(&model, &xs, &ys) < 0.1 * initial {
            break;
        }
    }
    let last = lstm_loss(&model, &xs, &ys);
    assert!(last < 0.1 * initial, "{initial} -> {last} after {step} steps");
}

#[test]
fn mlp_memorizes_ten_samples() {
    let mut r = rng(8);
    let xs: Vec<Vec<f64>> = (0..10).map(|_| (0..7).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut head = MlpHead::new(&[7, 16, 1], Activation::Tanh, &mut r).unwrap();
    let loss = |h: &MlpHead| -> f64 {
        xs.iter().zip(&ys).map(|(x, y)| (h.forward(x).unwrap().0[0] - y).powi(2)).sum::<f64>() / 10.0
    };
    let initial = loss(&head);
    let mut adam = AdamState::new(head.n_params(), 0.01, 0.9, 0.999).unwrap();
    for _ in 0..5000 {
        let mut grads = vec![0.0; head.n_params()];
        for (x, y) in xs.iter().zip(&ys) {
            let (out, cache) = head.forward(x).unwrap();
            head.backward(&cache, &[2.0 * (out[0] - y) / 10.0], &mut grads).unwrap();
        }
        adam.step(head.params_mut(), &grads).unwrap();
    }
    assert!(loss(&head) < 0.1 * initial);
}

#[test]
fn every_lstm_parameter_moves_the_loss() {
    let (xs, ys) = batch(6, 4, 3, 11);
    let mut model = LstmRegressor::new(3, 4, &mut rng(12));
    let base = lstm_loss(&model, &xs, &ys);
    for i in 0..model.n_params() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + 1e-3;
        let moved = lstm_loss(&model, &xs, &ys);
        model.params_mut()[i] = orig;
        assert!((moved - base).abs() > 1e-12, "parameter {i} is inert");
    }
}

#[test]
fn every_mlp_parameter_moves_the_loss() {
    let mut r = rng(13);
    let mut head = MlpHead::new(&[5, 6, 3, 1], Activation::Tanh, &mut r).unwrap();
    let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let loss = |h: &MlpHead| xs.iter().map(|x| (h.forward(x).unwrap().0[0] - 0.3).powi(2)).sum::<f64>();
    let base = loss(&head);
    for i in 0..head.n_params() {
        let orig = head.params()[i];
        head.params_mut()[i] = orig + 1e-3;
        let moved = loss(&head);
        head.params_mut()[i] = orig;
        assert!((moved - base).abs() > 1e-12, "parameter {i} is inert");
    }
}

#[test]
fn forward_is_deterministic() {
    let (xs, _) = batch(1, 6, 320, 21);
    let model = LstmRegressor::new(320, 16, &mut rng(22));
    assert_eq!(model.predict(&xs[0]).unwrap(), model.predict(&xs[0]).unwrap());
}
