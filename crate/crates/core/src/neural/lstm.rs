use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, uniform_init};
use crate::document::Versioned;
use crate::error::{Error, Result};

/// Single-layer LSTM whose scalar output is an affine map of the final hidden
/// state.
///
/// Flat layout: `W` (4H×I, row-major), `U` (4H×H), `b` (4H), `w_out` (H),
/// `b_out`. Gate rows are ordered input, forget, output, candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmRegressor {
    input_dim: usize,
    hidden_dim: usize,
    params: Vec<f64>,
    #[serde(skip)]
    version: u64,
}

impl Versioned for LstmRegressor {
    const FORMAT: &'static str = "oilcast.lstm";
    const VERSION: u32 = 1;
}

/// Activations retained by a forward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    version: u64,
    inputs: Option<Vec<Vec<f64>>>,
    /// Post-activation gates per step, `[i, f, o, g]` each of length H.
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
}

impl LstmCache {
    pub fn steps(&self) -> usize {
        self.hidden.len()
    }

    pub fn final_hidden(&self) -> &[f64] {
        self.hidden.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl LstmRegressor {
    /// Uniform `±1/√fan_in` initialisation (fan-in `I + H` for the gates,
    /// `H` for the output), forget-gate bias 1.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(input_dim, hidden_dim);
        let (h, i) = (hidden_dim, input_dim);
        let gate_bound = 1.0 / ((i + h) as f64).sqrt();
        let w_end = m.off_b();
        uniform_init(&mut m.params[..w_end], gate_bound, rng);
        let b = m.off_b();
        uniform_init(&mut m.params[b..b + 4 * h], gate_bound, rng);
        for v in &mut m.params[b + h..b + 2 * h] {
            *v = 1.0;
        }
        let o = m.off_out();
        uniform_init(&mut m.params[o..o + h + 1], 1.0 / (h as f64).sqrt(), rng);
        m
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let n = 4 * hidden_dim * (input_dim + hidden_dim + 1) + hidden_dim + 1;
        LstmRegressor {
            input_dim,
            hidden_dim,
            params: vec![0.0; n],
            version: 0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access; invalidates caches from earlier forward passes.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    fn off_u(&self) -> usize {
        4 * self.hidden_dim * self.input_dim
    }

    fn off_b(&self) -> usize {
        self.off_u() + 4 * self.hidden_dim * self.hidden_dim
    }

    fn off_out(&self) -> usize {
        self.off_b() + 4 * self.hidden_dim
    }

    /// Output bias index in the flat layout.
    pub fn output_bias_index(&self) -> usize {
        self.params.len() - 1
    }

    /// `W·x`, the input contribution to the gate pre-activations.
    pub fn project(&self, x: &[f64], out: &mut [f64]) {
        let i = self.input_dim;
        for (r, o) in out.iter_mut().enumerate().take(4 * self.hidden_dim) {
            let row = &self.params[r * i..(r + 1) * i];
            *o = row.iter().zip(x).map(|(w, v)| w * v).sum();
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "LSTM input",
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LSTM input".into()));
        }
        Ok(())
    }

    /// Runs the recurrence on precomputed input projections (see [`Self::project`]).
    pub fn forward_projected<P: AsRef<[f64]>>(&self, projections: &[P]) -> Result<(f64, LstmCache)> {
        if projections.is_empty() {
            return Err(Error::InsufficientData {
                what: "LSTM sequence",
                needed: 1,
                got: 0,
            });
        }
        let h = self.hidden_dim;
        let u = &self.params[self.off_u()..self.off_b()];
        let b = &self.params[self.off_b()..self.off_out()];
        let mut gates = Vec::with_capacity(projections.len());
        let mut cells = Vec::with_capacity(projections.len());
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(projections.len());
        let zeros = vec![0.0; h];
        for p in projections {
            let p = p.as_ref();
            if p.len() != 4 * h {
                return Err(Error::DimensionMismatch {
                    what: "LSTM projection",
                    expected: 4 * h,
                    got: p.len(),
                });
            }
            let h_prev = hidden.last().unwrap_or(&zeros);
            let c_prev: &[f64] = cells.last().map(Vec::as_slice).unwrap_or(&zeros);
            let mut z = vec![0.0; 4 * h];
            for r in 0..4 * h {
                let row = &u[r * h..(r + 1) * h];
                z[r] = p[r] + b[r] + row.iter().zip(h_prev).map(|(w, v)| w * v).sum::<f64>();
            }
            for r in 0..3 * h {
                z[r] = sigmoid(z[r]);
            }
            for r in 3 * h..4 * h {
                z[r] = z[r].tanh();
            }
            let mut c = vec![0.0; h];
            let mut hn = vec![0.0; h];
            for k in 0..h {
                c[k] = z[h + k] * c_prev[k] + z[k] * z[3 * h + k];
                hn[k] = z[2 * h + k] * c[k].tanh();
            }
            gates.push(z);
            cells.push(c);
            hidden.push(hn);
        }
        let o = self.off_out();
        let last = hidden.last().expect("nonempty");
        let y = self.params[o + h] + self.params[o..o + h].iter().zip(last).map(|(w, v)| w * v).sum::<f64>();
        Ok((
            y,
            LstmCache {
                version: self.version,
                inputs: None,
                gates,
                cells,
                hidden,
            },
        ))
    }

    /// Backpropagates `upstream = ∂L/∂y`, accumulating gradients for `U`, `b`
    /// and the output layer into `grads`. Returns `∂L/∂(W·x_t)` per step.
    pub fn backward_projected(&self, cache: &LstmCache, upstream: f64, grads: &mut [f64]) -> Result<Vec<Vec<f64>>> {
        if cache.version != self.version {
            return Err(Error::StaleCache {
                cache: cache.version,
                model: self.version,
            });
        }
        if grads.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                what: "LSTM gradient buffer",
                expected: self.params.len(),
                got: grads.len(),
            });
        }
        let h = self.hidden_dim;
        let (ou, ob, oo) = (self.off_u(), self.off_b(), self.off_out());
        let steps = cache.steps();
        let mut dh: Vec<f64> = self.params[oo..oo + h].iter().map(|w| w * upstream).collect();
        for k in 0..h {
            grads[oo + k] += upstream * cache.hidden[steps - 1][k];
        }
        grads[oo + h] += upstream;

        let zeros = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dpre = vec![Vec::new(); steps];
        for t in (0..steps).rev() {
            let gt = &cache.gates[t];
            let c = &cache.cells[t];
            let c_prev: &[f64] = if t > 0 { &cache.cells[t - 1] } else { &zeros };
            let h_prev: &[f64] = if t > 0 { &cache.hidden[t - 1] } else { &zeros };
            let mut dz = vec![0.0; 4 * h];
            for k in 0..h {
                let (ig, fg, og, gg) = (gt[k], gt[h + k], gt[2 * h + k], gt[3 * h + k]);
                let tc = c[k].tanh();
                let dc = dc_next[k] + dh[k] * og * (1.0 - tc * tc);
                dz[k] = dc * gg * ig * (1.0 - ig);
                dz[h + k] = dc * c_prev[k] * fg * (1.0 - fg);
                dz[2 * h + k] = dh[k] * tc * og * (1.0 - og);
                dz[3 * h + k] = dc * ig * (1.0 - gg * gg);
                dc_next[k] = dc * fg;
            }
            let mut dh_prev = vec![0.0; h];
            for r in 0..4 * h {
                let d = dz[r];
                if d == 0.0 {
                    continue;
                }
                grads[ob + r] += d;
                let row = ou + r * h;
                for k in 0..h {
                    grads[row + k] += d * h_prev[k];
                    dh_prev[k] += d * self.params[row + k];
                }
            }
            dh = dh_prev;
            dpre[t] = dz;
        }
        Ok(dpre)
    }

    /// Adds `dpre ⊗ x` into the `W` block of `grads`.
    pub fn accumulate_input_grad(&self, dpre: &[f64], x: &[f64], grads: &mut [f64]) {
        let i = self.input_dim;
        for (r, d) in dpre.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = &mut grads[r * i..(r + 1) * i];
            for (g, v) in row.iter_mut().zip(x) {
                *g += d * v;
            }
        }
    }

    pub fn predict<S: AsRef<[f64]>>(&self, sequence: &[S]) -> Result<f64> {
        lstm_forward(self, sequence).map(|(y, _)| y)
    }
}

/// Forward pass over a sequence of `input_dim` vectors; the prediction is the
/// output projection of the final hidden state.
pub fn lstm_forward<S: AsRef<[f64]>>(model: &LstmRegressor, sequence: &[S]) -> Result<(f64, LstmCache)> {
    let mut projections = Vec::with_capacity(sequence.len());
    for x in sequence {
        let x = x.as_ref();
        model.check_input(x)?;
        let mut p = vec![0.0; 4 * model.hidden_dim];
        model.project(x, &mut p);
        projections.push(p);
    }
    let (y, mut cache) = model.forward_projected(&projections)?;
    cache.inputs = Some(sequence.iter().map(|x| x.as_ref().to_vec()).collect());
    Ok((y, cache))
}

/// Gradient of `upstream · y` with respect to every parameter.
pub fn lstm_backward(model: &LstmRegressor, cache: &LstmCache, upstream: f64) -> Result<Vec<f64>> {
    let inputs = cache
        .inputs
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("cache was built from projections; inputs unavailable".into()))?;
    let mut grads = vec![0.0; model.n_params()];
    let dpre = model.backward_projected(cache, upstream, &mut grads)?;
    for (d, x) in dpre.iter().zip(inputs) {
        model.accumulate_input_grad(d, x, &mut grads);
    }
    Ok(grads)
}
