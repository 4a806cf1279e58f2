use rand::Rng;
use serde::{Deserialize, Serialize};

use super::uniform_init;
use crate::document::Versioned;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layers; `hidden_activation` after every layer but the
/// last, which is affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHead {
    dims: Vec<usize>,
    pub hidden_activation: Activation,
    params: Vec<f64>,
}

impl Versioned for MlpHead {
    const FORMAT: &'static str = "oilcast.mlp";
    const VERSION: u32 = 1;
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer, then the final output.
    activations: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl MlpHead {
    /// `dims = [input, hidden.., output]`. Zero parameters.
    pub fn zeros(dims: &[usize], hidden_activation: Activation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidInput(format!("MLP dims must be ≥ 2 positive sizes, got {dims:?}")));
        }
        let n = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(MlpHead {
            dims: dims.to_vec(),
            hidden_activation,
            params: vec![0.0; n],
        })
    }

    /// Uniform `±1/√fan_in` weights and biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], hidden_activation: Activation, rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(dims, hidden_activation)?;
        for l in 0..m.n_layers() {
            let (w, b) = m.layer_range(l);
            let bound = 1.0 / (m.dims[l] as f64).sqrt();
            uniform_init(&mut m.params[w.start..b.end], bound, rng);
        }
        Ok(m)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Ranges of the weight matrix (out×in, row-major) and bias of layer `l`.
    pub fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mut off = 0;
        for w in self.dims.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        let (i, o) = (self.dims[l], self.dims[l + 1]);
        (off..off + i * o, off + i * o..off + i * o + o)
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        if input.len() != self.dims[0] {
            return Err(Error::DimensionMismatch {
                what: "MLP input",
                expected: self.dims[0],
                got: input.len(),
            });
        }
        let mut acts = vec![input.to_vec()];
        for l in 0..self.n_layers() {
            let (wr, br) = self.layer_range(l);
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let x = acts.last().expect("nonempty");
            let w = &self.params[wr];
            let b = &self.params[br];
            let act = if l + 1 == self.n_layers() { Activation::Identity } else { self.hidden_activation };
            let y: Vec<f64> = (0..o)
                .map(|r| act.apply(b[r] + w[r * i..(r + 1) * i].iter().zip(x).map(|(a, v)| a * v).sum::<f64>()))
                .collect();
            acts.push(y);
        }
        let out = acts.last().cloned().unwrap_or_default();
        Ok((out, MlpCache { activations: acts }))
    }

    /// Accumulates `∂L/∂params` into `grads` and returns `∂L/∂input`.
    pub fn backward(&self, cache: &MlpCache, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        let out_dim = *self.dims.last().expect("nonempty");
        if upstream.len() != out_dim {
            return Err(Error::DimensionMismatch {
                what: "MLP upstream gradient",
                expected: out_dim,
                got: upstream.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                what: "MLP gradient buffer",
                expected: self.params.len(),
                got: grads.len(),
            });
        }
        let mut delta = upstream.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (wr, br) = self.layer_range(l);
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            if l + 1 != self.n_layers() {
                let y = &cache.activations[l + 1];
                for r in 0..o {
                    delta[r] *= self.hidden_activation.deriv_from_output(y[r]);
                }
            }
            let x = &cache.activations[l];
            let mut dx = vec![0.0; i];
            for r in 0..o {
                let d = delta[r];
                grads[br.start + r] += d;
                let row = wr.start + r * i;
                for k in 0..i {
                    grads[row + k] += d * x[k];
                    dx[k] += d * self.params[row + k];
                }
            }
            delta = dx;
        }
        Ok(delta)
    }
}

pub fn mlp_forward(head: &MlpHead, input: &[f64]) -> Result<Vec<f64>> {
    head.forward(input).map(|(y, _)| y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{finite_difference, relative_error};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_weights_pass_through() {
        let mut m = MlpHead::zeros(&[3, 3, 3], Activation::Identity).unwrap();
        for l in 0..2 {
            let (w, _) = m.layer_range(l);
            for k in 0..3 {
                m.params_mut()[w.start + k * 3 + k] = 1.0;
            }
        }
        assert_eq!(mlp_forward(&m, &[1.0, -2.0, 0.5]).unwrap(), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn zero_weights_give_final_bias() {
        let mut m = MlpHead::zeros(&[2, 4, 2], Activation::Tanh).unwrap();
        let (_, b) = m.layer_range(1);
        m.params_mut()[b.start] = 0.3;
        m.params_mut()[b.start + 1] = -1.0;
        assert_eq!(mlp_forward(&m, &[5.0, 6.0]).unwrap(), vec![0.3, -1.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = MlpHead::new(&[4, 6, 5, 2], Activation::Tanh, &mut rng).unwrap();
        let x = [0.3, -0.7, 1.1, 0.05];
        let up = [0.6, -1.3];
        let (_, cache) = m.forward(&x).unwrap();
        let mut g = vec![0.0; m.n_params()];
        let dx = m.backward(&cache, &up, &mut g).unwrap();
        let mut probe = m.clone();
        let numeric = finite_difference(m.params_mut(), 1e-5, |p| {
            probe.params_mut().copy_from_slice(p);
            let y = mlp_forward(&probe, &x).unwrap();
            y[0] * up[0] + y[1] * up[1]
        });
        assert!(relative_error(&g, &numeric) < 1e-7);
        let mut xv = x.to_vec();
        let ndx = finite_difference(&mut xv, 1e-5, |xx| {
            let y = mlp_forward(&m, xx).unwrap();
            y[0] * up[0] + y[1] * up[1]
        });
        assert!(relative_error(&dx, &ndx) < 1e-7);
    }

    #[test]
    fn dimension_mismatch() {
        let m = MlpHead::zeros(&[3, 1], Activation::Tanh).unwrap();
        assert!(mlp_forward(&m, &[1.0]).is_err());
        assert!(MlpHead::zeros(&[3], Activation::Tanh).is_err());
    }
}
