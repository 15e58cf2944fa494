//! Regularized least-squares solvers for one local model.
//!
//! Objectives carry no `1/2` and no `1/T` factor:
//!
//! ```text
//! ||b - A θ||² + μ ||θ||² + ν pen(θ)
//! ```
//!
//! with `pen` the ∞-norm ([`solve_ridge_linf`]) or the 1-norm
//! ([`solve_elastic_net`]). Everything is computed from the sufficient
//! statistics `AᵀA`, `Aᵀb`, `bᵀb`, so iteration cost does not depend on the
//! number of rows.

use nalgebra::{DMatrix, DVector};

use crate::error::{PwarxError, Result};
use crate::prox::{prox_linf, soft_threshold};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverSettings {
    /// Relative objective decrease below which an iterative solver stops.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 20_000,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(PwarxError::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(PwarxError::InvalidParameter(
                "max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Least-squares data of one mode plus the regularization weights.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    gram: DMatrix<f64>,
    atb: DVector<f64>,
    btb: f64,
    rows: usize,
    mu: f64,
    nu: f64,
}

impl RegressionProblem {
    pub fn new(a: &DMatrix<f64>, b: &DVector<f64>, mu: f64, nu: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(PwarxError::LengthMismatch {
                left: a.nrows(),
                right: b.len(),
            });
        }
        Self::from_rows(
            a.row_iter()
                .zip(b.iter())
                .map(|(r, &y)| (r.iter().copied().collect::<Vec<_>>(), y)),
            a.ncols(),
            mu,
            nu,
        )
    }

    /// Accumulates the sufficient statistics from `(row, target)` pairs.
    pub fn from_rows<R: AsRef<[f64]>>(
        rows: impl IntoIterator<Item = (R, f64)>,
        dim: usize,
        mu: f64,
        nu: f64,
    ) -> Result<Self> {
        let mut acc = GramAccumulator::new(dim);
        for (row, y) in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(PwarxError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            acc.push(row, y);
        }
        acc.into_problem(mu, nu)
    }

    pub(crate) fn from_parts(
        gram: DMatrix<f64>,
        atb: DVector<f64>,
        btb: f64,
        rows: usize,
        mu: f64,
        nu: f64,
    ) -> Result<Self> {
        if gram.ncols() == 0 {
            return Err(PwarxError::InvalidParameter(
                "regression needs at least one column".into(),
            ));
        }
        if !(mu >= 0.0 && nu >= 0.0) {
            return Err(PwarxError::InvalidParameter(format!(
                "weights must be non-negative (mu={mu}, nu={nu})"
            )));
        }
        Ok(Self {
            gram,
            atb,
            btb,
            rows,
            mu,
            nu,
        })
    }

    pub fn dim(&self) -> usize {
        self.atb.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn with_weights(&self, mu: f64, nu: f64) -> Result<Self> {
        Self::from_parts(
            self.gram.clone(),
            self.atb.clone(),
            self.btb,
            self.rows,
            mu,
            nu,
        )
    }

    /// `||b - A θ||²`.
    pub fn loss(&self, theta: &[f64]) -> f64 {
        let th = DVector::from_column_slice(theta);
        let q = &self.gram * &th;
        (self.btb - 2.0 * self.atb.dot(&th) + th.dot(&q)).max(0.0)
    }

    /// `||b - A θ||² + μ ||θ||²`.
    pub fn ridge_objective(&self, theta: &[f64]) -> f64 {
        self.loss(theta) + self.mu * sq_norm(theta)
    }

    pub fn ridge_linf_objective(&self, theta: &[f64]) -> f64 {
        self.ridge_objective(theta) + self.nu * linf(theta)
    }

    pub fn elastic_net_objective(&self, theta: &[f64]) -> f64 {
        self.ridge_objective(theta) + self.nu * l1(theta)
    }

    fn check_init(&self, init: Option<&[f64]>) -> Result<Vec<f64>> {
        match init {
            Some(v) if v.len() != self.dim() => Err(PwarxError::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            }),
            Some(v) => Ok(v.to_vec()),
            None => Ok(vec![0.0; self.dim()]),
        }
    }

    /// Optimality residual scale: large entries of `Aᵀb` set the gradient units.
    fn residual_scale(&self) -> f64 {
        self.atb.amax().max(self.nu).max(1.0)
    }
}

/// Streaming accumulation of `AᵀA`, `Aᵀb`, `bᵀb`.
#[derive(Debug, Clone)]
pub(crate) struct GramAccumulator {
    dim: usize,
    upper: Vec<f64>,
    atb: Vec<f64>,
    btb: f64,
    rows: usize,
}

impl GramAccumulator {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![0.0; dim * dim],
            atb: vec![0.0; dim],
            btb: 0.0,
            rows: 0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, row: &[f64], y: f64) {
        let d = self.dim;
        for i in 0..d {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let base = i * d;
            for j in i..d {
                self.upper[base + j] += ri * row[j];
            }
            self.atb[i] += ri * y;
        }
        self.btb += y * y;
        self.rows += 1;
    }

    pub(crate) fn into_problem(self, mu: f64, nu: f64) -> Result<RegressionProblem> {
        let d = self.dim;
        let gram = DMatrix::from_fn(d, d, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            self.upper[a * d + b]
        });
        RegressionProblem::from_parts(
            gram,
            DVector::from_vec(self.atb),
            self.btb,
            self.rows,
            mu,
            nu,
        )
    }
}

/// Result of an iterative solve. `theta` is the best iterate seen.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration (sweep for coordinate descent).
    pub history: Vec<f64>,
}

impl SolveOutcome {
    fn immediate(theta: Vec<f64>, objective: f64) -> Self {
        Self {
            theta,
            objective,
            iterations: 0,
            converged: true,
            history: vec![objective],
        }
    }
}

/// Exact minimizer of `||b - A θ||² + μ ||θ||²` (the `ν` weight is ignored).
pub fn solve_ridge(p: &RegressionProblem) -> Result<Vec<f64>> {
    if p.rows == 0 {
        return Ok(vec![0.0; p.dim()]);
    }
    let mut system = p.gram.clone();
    for i in 0..p.dim() {
        system[(i, i)] += p.mu;
    }
    let max_diag = system.diagonal().amax();
    let chol = system.cholesky().ok_or(PwarxError::SingularSystem)?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if !(min_pivot > 1e-13 * max_diag) {
        return Err(PwarxError::SingularSystem);
    }
    let theta = chol.solve(&p.atb);
    Ok(theta.iter().copied().collect())
}

/// Minimizes `||b - A θ||² + μ ||θ||² + ν ||θ||_∞` by accelerated proximal
/// gradient with step `1/L`, `L = 2 λ_max(AᵀA) + 2 μ`, restarting the
/// momentum whenever the objective would increase.
pub fn solve_ridge_linf(
    p: &RegressionProblem,
    s: &SolverSettings,
    init: Option<&[f64]>,
) -> Result<SolveOutcome> {
    s.validate()?;
    let dim = p.dim();
    if p.rows == 0 {
        return Ok(SolveOutcome::immediate(vec![0.0; dim], 0.0));
    }
    let lambda_max = p
        .gram
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |m, &v| m.max(v));
    let lipschitz = 2.0 * lambda_max + 2.0 * p.mu;
    if !(lipschitz > 0.0) {
        // A = 0 and μ = 0: only the penalty depends on θ
        let zero = vec![0.0; dim];
        let f = p.ridge_linf_objective(&zero);
        return Ok(SolveOutcome::immediate(zero, f));
    }
    let step = 1.0 / lipschitz;
    let threshold = p.residual_scale() * s.tol.max(1e-13);

    let smooth_grad = |th: &[f64]| -> Vec<f64> {
        let v = DVector::from_column_slice(th);
        let g = (&p.gram * &v - &p.atb) * 2.0 + v * (2.0 * p.mu);
        g.iter().copied().collect()
    };
    let prox_step = |from: &[f64]| -> Vec<f64> {
        let g = smooth_grad(from);
        let v: Vec<f64> = from.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        prox_linf(&v, step * p.nu)
    };

    let mut x = p.check_init(init)?;
    let mut fx = p.ridge_linf_objective(&x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut history = vec![fx];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < s.max_iters {
        iterations += 1;
        let mut from = y.clone();
        let mut x_new = prox_step(&from);
        let mut f_new = p.ridge_linf_objective(&x_new);
        if f_new > fx {
            // momentum overshoot: restart with a plain step from x
            t = 1.0;
            from = x.clone();
            x_new = prox_step(&from);
            f_new = p.ridge_linf_objective(&x_new);
        }
        if f_new > fx {
            // rounding level; x is already a fixed point
            history.push(fx);
            converged = true;
            break;
        }
        let residual = lipschitz
            * x_new
                .iter()
                .zip(&from)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let decrease = fx - f_new;
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        y = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        x = x_new;
        fx = f_new;
        t = t_new;
        history.push(fx);
        if decrease <= s.tol * fx.abs().max(f64::MIN_POSITIVE) && residual <= threshold {
            converged = true;
            break;
        }
    }
    Ok(SolveOutcome {
        theta: x,
        objective: fx,
        iterations,
        converged,
        history,
    })
}

/// Minimizes `||b - A θ||² + μ ||θ||² + ν ||θ||_1` by cyclic coordinate
/// descent with exact soft-threshold updates.
pub fn solve_elastic_net(
    p: &RegressionProblem,
    s: &SolverSettings,
    init: Option<&[f64]>,
) -> Result<SolveOutcome> {
    s.validate()?;
    let dim = p.dim();
    if p.rows == 0 {
        return Ok(SolveOutcome::immediate(vec![0.0; dim], 0.0));
    }
    let mut theta = p.check_init(init)?;
    // q = AᵀA θ, kept in sync with θ
    let mut q: Vec<f64> = (&p.gram * DVector::from_column_slice(&theta))
        .iter()
        .copied()
        .collect();
    let objective = |theta: &[f64], q: &[f64]| -> f64 {
        let loss = p.btb - 2.0 * dot_dv(&p.atb, theta) + theta.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
        loss.max(0.0) + p.mu * sq_norm(theta) + p.nu * l1(theta)
    };
    let threshold = p.residual_scale() * s.tol.max(1e-13);
    let mut f = objective(&theta, &q);
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < s.max_iters {
        iterations += 1;
        for j in 0..dim {
            let gjj = p.gram[(j, j)];
            let denom = gjj + p.mu;
            let old = theta[j];
            let new = if denom > 0.0 {
                let rho = p.atb[j] - (q[j] - gjj * old);
                soft_threshold(rho, 0.5 * p.nu) / denom
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                theta[j] = new;
                for (i, qi) in q.iter_mut().enumerate() {
                    *qi += p.gram[(i, j)] * delta;
                }
            }
        }
        let f_new = objective(&theta, &q);
        let decrease = f - f_new;
        f = f_new.min(f);
        history.push(f_new);
        if decrease <= s.tol * f.abs().max(f64::MIN_POSITIVE)
            && kkt_violation_l1(p, &theta, &q) <= threshold
        {
            converged = true;
            break;
        }
    }
    let objective = p.elastic_net_objective(&theta);
    Ok(SolveOutcome {
        theta,
        objective,
        iterations,
        converged,
        history,
    })
}

fn kkt_violation_l1(p: &RegressionProblem, theta: &[f64], q: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..theta.len() {
        let g = 2.0 * (q[j] - p.atb[j]) + 2.0 * p.mu * theta[j];
        let v = if theta[j] > 0.0 {
            (g + p.nu).abs()
        } else if theta[j] < 0.0 {
            (g - p.nu).abs()
        } else {
            (g.abs() - p.nu).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

fn dot_dv(a: &DVector<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub(crate) fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
