//! PWA separator fitting: multi-category discrimination with a squared
//! hinge loss and Tikhonov regularization,
//!
//! ```text
//! Σ_t Σ_{j≠s_t} max{0, (θ_j - θ_{s_t})'x̃_t + 1}² + λ Σ_k ||θ_k||²
//! ```
//!
//! The loss is continuously differentiable and piecewise quadratic, so the
//! solver uses the generalized Hessian (sum of `x̃x̃'` over the active hinge
//! terms plus `2λI`) as a Newton-type direction inside an Armijo
//! backtracking line search, falling back to the negative gradient when the
//! Newton system cannot be factored.

use nalgebra::{DMatrix, DVector};

use crate::data::RegressorSet;
use crate::error::{PwarxError, Result};
use crate::model::{dot, ModeSequence};
use crate::solvers::SolverSettings;

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Labeled extended regressors and the regularization weight `λ`.
#[derive(Debug, Clone, Copy)]
pub struct SeparatorProblem<'a> {
    extended: &'a [f64],
    dim: usize,
    labels: &'a [usize],
    num_modes: usize,
    lambda: f64,
}

impl<'a> SeparatorProblem<'a> {
    /// `extended` holds the rows `x̃_t` back to back, each of length `dim`.
    pub fn new(
        extended: &'a [f64],
        dim: usize,
        labels: &'a [usize],
        num_modes: usize,
        lambda: f64,
    ) -> Result<Self> {
        if dim == 0 || extended.len() % dim != 0 {
            return Err(PwarxError::DimensionMismatch {
                expected: dim,
                found: extended.len(),
            });
        }
        if extended.len() / dim != labels.len() {
            return Err(PwarxError::LengthMismatch {
                left: extended.len() / dim,
                right: labels.len(),
            });
        }
        if num_modes == 0 {
            return Err(PwarxError::InvalidParameter("K must be positive".into()));
        }
        if let Some(&label) = labels.iter().find(|&&s| s >= num_modes) {
            return Err(PwarxError::InvalidLabel {
                label,
                k: num_modes,
            });
        }
        if !(lambda > 0.0) {
            return Err(PwarxError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            extended,
            dim,
            labels,
            num_modes,
            lambda,
        })
    }

    pub fn from_regressors(
        set: &'a RegressorSet,
        modes: &'a ModeSequence,
        lambda: f64,
    ) -> Result<Self> {
        Self::new(set.extended_flat(), set.dim(), modes.labels(), modes.num_modes(), lambda)
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn rows(&self) -> impl Iterator<Item = (&'a [f64], usize)> + 'a {
        self.extended
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    /// Objective value, and optionally gradient and generalized Hessian, at
    /// the flattened parameters `theta[k * dim + i]`.
    fn evaluate(&self, theta: &[f64], grad: Option<&mut [f64]>, hess: Option<&mut DMatrix<f64>>) -> f64 {
        let (k_modes, d) = (self.num_modes, self.dim);
        let mut value = self.lambda * theta.iter().map(|v| v * v).sum::<f64>();
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            for (gi, ti) in g.iter_mut().zip(theta) {
                *gi = 2.0 * self.lambda * ti;
            }
        }
        let want_hess = hess.is_some();
        // pair_outer[(j * K + s)] accumulates Σ x̃x̃' (upper triangle) over
        // active terms with label s and competitor j
        let mut pair_outer = if want_hess {
            vec![0.0; k_modes * k_modes * d * d]
        } else {
            Vec::new()
        };
        let mut scores = vec![0.0; k_modes];
        for (x, s) in self.rows() {
            for (k, z) in scores.iter_mut().enumerate() {
                *z = dot(&theta[k * d..(k + 1) * d], x);
            }
            let zs = scores[s];
            for j in 0..k_modes {
                if j == s {
                    continue;
                }
                let h = scores[j] - zs + 1.0;
                if h <= 0.0 {
                    continue;
                }
                value += h * h;
                if let Some(g) = grad.as_deref_mut() {
                    let c = 2.0 * h;
                    for i in 0..d {
                        g[j * d + i] += c * x[i];
                        g[s * d + i] -= c * x[i];
                    }
                }
                if want_hess {
                    let block = &mut pair_outer[(j * k_modes + s) * d * d..][..d * d];
                    for a in 0..d {
                        let xa = x[a];
                        for b in a..d {
                            block[a * d + b] += xa * x[b];
                        }
                    }
                }
            }
        }
        if let Some(h) = hess {
            h.fill(0.0);
            for i in 0..k_modes * d {
                h[(i, i)] = 2.0 * self.lambda;
            }
            for j in 0..k_modes {
                for s in 0..k_modes {
                    if j == s {
                        continue;
                    }
                    let block = &pair_outer[(j * k_modes + s) * d * d..][..d * d];
                    for a in 0..d {
                        for b in 0..d {
                            let w = 2.0 * if a <= b { block[a * d + b] } else { block[b * d + a] };
                            if w == 0.0 {
                                continue;
                            }
                            h[(j * d + a, j * d + b)] += w;
                            h[(s * d + a, s * d + b)] += w;
                            h[(j * d + a, s * d + b)] -= w;
                            h[(s * d + a, j * d + b)] -= w;
                        }
                    }
                }
            }
        }
        value
    }
}

fn flatten(theta_x: &[Vec<f64>], k: usize, d: usize) -> Result<Vec<f64>> {
    if theta_x.len() != k {
        return Err(PwarxError::LengthMismatch {
            left: theta_x.len(),
            right: k,
        });
    }
    let mut flat = Vec::with_capacity(k * d);
    for v in theta_x {
        if v.len() != d {
            return Err(PwarxError::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        flat.extend_from_slice(v);
    }
    Ok(flat)
}

fn unflatten(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks_exact(d).map(|c| c.to_vec()).collect()
}

/// Value and exact gradient of the separator objective.
pub fn separator_objective(
    theta_x: &[Vec<f64>],
    p: &SeparatorProblem<'_>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let flat = flatten(theta_x, p.num_modes, p.dim)?;
    let mut grad = vec![0.0; flat.len()];
    let value = p.evaluate(&flat, Some(&mut grad), None);
    Ok((value, unflatten(&grad, p.dim)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorFit {
    pub theta_x: Vec<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Minimizes the separator objective, starting from `init` or from zero.
pub fn fit_separator(
    p: &SeparatorProblem<'_>,
    s: &SolverSettings,
    init: Option<&[Vec<f64>]>,
) -> Result<SeparatorFit> {
    s.validate()?;
    let (k, d) = (p.num_modes, p.dim);
    let n = k * d;
    if k == 1 {
        return Ok(SeparatorFit {
            theta_x: vec![vec![0.0; d]],
            objective: 0.0,
            iterations: 0,
            converged: true,
            history: vec![0.0],
        });
    }
    let mut theta = match init {
        Some(v) => flatten(v, k, d)?,
        None => vec![0.0; n],
    };
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    let mut f = p.evaluate(&theta, Some(&mut grad), Some(&mut hess));
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; n];

    while iterations < s.max_iters {
        iterations += 1;
        let g = DVector::from_column_slice(&grad);
        let mut direction = match hess.clone().cholesky() {
            Some(chol) => -chol.solve(&g),
            None => -g.clone(),
        };
        let mut slope = g.dot(&direction);
        if !(slope < 0.0) {
            direction = -g.clone();
            slope = -g.norm_squared();
        }
        // Newton decrement test: predicted decrease is -slope / 2
        if -0.5 * slope <= s.tol * f.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                trial[i] = theta[i] + step * direction[i];
            }
            let ft = p.evaluate(&trial, None, None);
            if ft <= f + ARMIJO_C * step * slope {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            // no representable descent left
            converged = true;
            break;
        };
        std::mem::swap(&mut theta, &mut trial);
        let decrease = f - f_new;
        f = p.evaluate(&theta, Some(&mut grad), Some(&mut hess));
        history.push(f);
        if decrease <= s.tol * f.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(SeparatorFit {
        theta_x: unflatten(&theta, d),
        objective: f,
        iterations,
        converged,
        history,
    })
}
