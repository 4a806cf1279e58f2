//! Quasi-Newton minimisation (BFGS with Armijo backtracking) over smooth
//! objectives whose gradient is taken by central differences.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Bfgs {
    pub max_iter: usize,
    /// Convergence when the infinity norm of the gradient drops below this.
    pub grad_tol: f64,
    /// ... or when the relative objective change drops below this.
    pub f_tol: f64,
}

impl Default for Bfgs {
    fn default() -> Self {
        Bfgs {
            max_iter: 500,
            grad_tol: 1e-6,
            f_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

impl Minimum {
    /// Turns a non-converged run into an [`Error::Optimization`] carrying the
    /// best point found.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Optimization {
                iterations: self.iterations,
                best_value: self.value,
                grad_norm: self.grad_norm,
                best_params: self.x,
            })
        }
    }
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = eval(f, &xp);
        xp[i] = orig - h;
        let fm = eval(f, &xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central-difference Hessian, symmetrised.
pub fn numeric_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut hess = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    let steps: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let f0 = f(x);
    for i in 0..n {
        for j in i..n {
            let (hi, hj) = (steps[i], steps[j]);
            let val = if i == j {
                xp[i] = x[i] + hi;
                let fp = f(&xp);
                xp[i] = x[i] - hi;
                let fm = f(&xp);
                xp[i] = x[i];
                (fp - 2.0 * f0 + fm) / (hi * hi)
            } else {
                let mut corner = |si: f64, sj: f64| {
                    xp[i] = x[i] + si * hi;
                    xp[j] = x[j] + sj * hj;
                    let v = f(&xp);
                    xp[i] = x[i];
                    xp[j] = x[j];
                    v
                };
                (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                    / (4.0 * hi * hj)
            };
            hess[i][j] = val;
            hess[j][i] = val;
        }
    }
    hess
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

impl Bfgs {
    pub fn minimize<F: Fn(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let mut x = x0.to_vec();
        let mut fx = eval(&f, &x);
        if n == 0 {
            return Minimum {
                x,
                value: fx,
                iterations: 0,
                grad_norm: 0.0,
                converged: fx.is_finite(),
            };
        }
        let mut g = numeric_gradient(&f, &x);
        // inverse Hessian approximation, row-major
        let mut h = identity(n);
        let mut iterations = 0;
        let mut converged = false;

        while iterations < self.max_iter {
            iterations += 1;
            if inf_norm(&g) < self.grad_tol {
                converged = true;
                break;
            }
            let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
            let mut slope = dot(&dir, &g);
            if slope >= 0.0 || !slope.is_finite() {
                // lost descent; restart from steepest descent
                h = identity(n);
                dir = g.iter().map(|v| -v).collect();
                slope = dot(&dir, &g);
            }

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
                let ft = eval(&f, &trial);
                if ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft));
                    break;
                }
                step *= 0.5;
            }
            let Some((x_new, f_new)) = accepted else {
                // no decrease possible along any tried step: at numerical optimum
                converged = inf_norm(&g) < self.grad_tol.sqrt();
                break;
            };

            let g_new = numeric_gradient(&f, &x_new);
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            let rel_change = (fx - f_new).abs() / fx.abs().max(1.0);
            x = x_new;
            fx = f_new;
            g = g_new;

            if sy > 1e-12 {
                bfgs_update(&mut h, &s, &y, sy);
            }
            if rel_change < self.f_tol {
                converged = true;
                break;
            }
        }
        let grad_norm = inf_norm(&g);
        if grad_norm < self.grad_tol {
            converged = true;
        }
        Minimum {
            x,
            value: fx,
            iterations,
            grad_norm,
            converged,
        }
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
