//! LSTM, MLP and ADAM with hand-written gradients. Parameters are stored as
//! flat `Vec<f64>` so a single optimizer state can drive any model.

mod adam;
mod lstm;
mod mlp;

pub use adam::AdamState;
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmRegressor};
pub use mlp::{mlp_forward, Activation, MlpCache, MlpHead};

use rand::Rng;

pub(crate) fn uniform_init<R: Rng + ?Sized>(out: &mut [f64], bound: f64, rng: &mut R) {
    for v in out {
        *v = rng.random_range(-bound..bound);
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Relative error used for gradient checks: `‖a − b‖ / (‖a‖ + ‖b‖)`, zero
/// when both are zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na + nb == 0.0 {
        0.0
    } else {
        diff / (na + nb)
    }
}

/// Central finite-difference gradient of a scalar function of a flat
/// parameter vector, perturbing in place.
pub fn finite_difference<F: FnMut(&[f64]) -> f64>(params: &mut [f64], step: f64, mut f: F) -> Vec<f64> {
    let mut g = vec![0.0; params.len()];
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + step;
        let up = f(params);
        params[i] = orig - step;
        let down = f(params);
        params[i] = orig;
        g[i] = (up - down) / (2.0 * step);
    }
    g
}

/// Rescales `grads` so its Euclidean norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}
