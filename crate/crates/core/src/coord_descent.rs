//! Coordinate-descent fitting of a PWARX model with a fixed number of modes.
//!
//! One outer iteration estimates the local models for the current labels,
//! then the separator for the same labels, then relabels every sample. The
//! loop stops once the labels repeat. [`multi_start_fit`] runs it from
//! several random labelings and keeps the cheapest result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::RegressorSet;
use crate::error::{PwarxError, Result};
use crate::model::{argmin_first, dot, ModeSequence, PwarxModel};
use crate::separator::{fit_separator, SeparatorProblem};
use crate::solvers::{
    l1, linf, solve_elastic_net, solve_ridge, solve_ridge_linf, sq_norm, GramAccumulator,
    SolverSettings,
};

/// Regularizer applied to every local parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegularizerKind {
    /// `μ ||θ||²`
    RidgeOnly { mu: f64 },
    /// `μ ||θ||² + ν ||θ||_∞`, shrinks whole vectors.
    RidgeLinf { mu: f64, nu: f64 },
    /// `μ ||θ||² + ν ||θ||_1`, shrinks single components.
    ElasticNet { mu: f64, nu: f64 },
}

impl RegularizerKind {
    pub fn mu(&self) -> f64 {
        match *self {
            Self::RidgeOnly { mu } | Self::RidgeLinf { mu, .. } | Self::ElasticNet { mu, .. } => mu,
        }
    }

    pub fn nu(&self) -> f64 {
        match *self {
            Self::RidgeOnly { .. } => 0.0,
            Self::RidgeLinf { nu, .. } | Self::ElasticNet { nu, .. } => nu,
        }
    }

    /// Same penalty family with `ν = 0`, i.e. plain ridge.
    pub fn without_shrinkage(&self) -> Self {
        Self::RidgeOnly { mu: self.mu() }
    }

    pub fn penalty(&self, theta: &[f64]) -> f64 {
        match *self {
            Self::RidgeOnly { mu } => mu * sq_norm(theta),
            Self::RidgeLinf { mu, nu } => mu * sq_norm(theta) + nu * linf(theta),
            Self::ElasticNet { mu, nu } => mu * sq_norm(theta) + nu * l1(theta),
        }
    }

    fn validate(&self) -> Result<()> {
        let (mu, nu) = (self.mu(), self.nu());
        if !(mu >= 0.0 && mu.is_finite() && nu >= 0.0 && nu.is_finite()) {
            return Err(PwarxError::InvalidParameter(format!(
                "regularization weights must be finite and non-negative (mu={mu}, nu={nu})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Weight of the separator terms in the overall cost.
    pub rho: f64,
    /// Tikhonov weight of the separator parameters.
    pub lambda: f64,
    pub reg: RegularizerKind,
    /// Threshold for redundant models and negligible coefficients.
    pub delta: f64,
    pub k_max: usize,
    pub n_a_max: usize,
    pub n_b_max: usize,
    /// Number of random initial mode sequences.
    pub restarts: usize,
    pub max_outer: usize,
    pub solver: SolverSettings,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            lambda: 1e-3,
            reg: RegularizerKind::RidgeLinf { mu: 0.1, nu: 0.9 },
            delta: 0.01,
            k_max: 10,
            n_a_max: 10,
            n_b_max: 10,
            restarts: 20,
            max_outer: 50,
            solver: SolverSettings::default(),
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("rho", self.rho), ("lambda", self.lambda), ("delta", self.delta)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PwarxError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        self.reg.validate()?;
        self.solver.validate()?;
        if self.restarts == 0 {
            return Err(PwarxError::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.max_outer == 0 {
            return Err(PwarxError::InvalidParameter("max_outer must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_reg(&self, reg: RegularizerKind) -> Self {
        Self { reg, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Output of one coordinate-descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: PwarxModel,
    pub modes: ModeSequence,
    /// Overall cost at `(model, modes)`, all regularizers included.
    pub objective: f64,
    pub outer_iterations: usize,
    /// Labels reached a fixed point before `max_outer`.
    pub converged: bool,
    /// Cost after each of the three steps of every outer iteration.
    pub objective_trace: Vec<f64>,
}

/// Estimates every local model from the samples currently assigned to it.
/// Modes without samples get the zero vector.
pub fn fit_local_models(
    set: &RegressorSet,
    modes: &ModeSequence,
    reg: &RegularizerKind,
    solver: &SolverSettings,
    warm_start: Option<&[Vec<f64>]>,
) -> Result<Vec<Vec<f64>>> {
    if modes.len() != set.len() {
        return Err(PwarxError::LengthMismatch {
            left: modes.len(),
            right: set.len(),
        });
    }
    let d = set.dim();
    let k = modes.num_modes();
    let mut acc = vec![GramAccumulator::new(d); k];
    for ((x, &y), &s) in set.extended_rows().zip(set.targets()).zip(modes.labels()) {
        acc[s].push(x, y);
    }
    acc.into_iter()
        .enumerate()
        .map(|(mode, a)| {
            let p = a.into_problem(reg.mu(), reg.nu())?;
            let init = warm_start.and_then(|w| w.get(mode)).map(|v| v.as_slice());
            match reg {
                RegularizerKind::RidgeOnly { .. } => solve_ridge(&p),
                RegularizerKind::RidgeLinf { .. } => Ok(solve_ridge_linf(&p, solver, init)?.theta),
                RegularizerKind::ElasticNet { .. } => Ok(solve_elastic_net(&p, solver, init)?.theta),
            }
        })
        .collect()
}

/// Separator violation term of one sample if it were labeled `k`, for all `k`,
/// written into `out`. `scores` holds `θ_{x,j}'x̃` for every `j`.
#[inline]
fn separator_losses(scores: &[f64], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        let zk = scores[k];
        *o = scores
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &zj)| {
                let h = zj - zk + 1.0;
                if h > 0.0 {
                    h * h
                } else {
                    0.0
                }
            })
            .sum();
    }
}

fn check_parameters(set: &RegressorSet, theta_y: &[Vec<f64>], theta_x: &[Vec<f64>]) -> Result<()> {
    if theta_y.len() != theta_x.len() || theta_y.is_empty() {
        return Err(PwarxError::LengthMismatch {
            left: theta_y.len(),
            right: theta_x.len(),
        });
    }
    for v in theta_y.iter().chain(theta_x) {
        if v.len() != set.dim() {
            return Err(PwarxError::DimensionMismatch {
                expected: set.dim(),
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// Relabels each sample with the mode minimizing its fit error plus
/// `rho` times its separator violation, ties to the smallest index.
///
/// The cost has no coupling between time steps, so the sequence-level
/// minimization splits into independent per-sample minimizations.
pub fn assign_modes(
    set: &RegressorSet,
    theta_y: &[Vec<f64>],
    theta_x: &[Vec<f64>],
    rho: f64,
) -> Result<ModeSequence> {
    check_parameters(set, theta_y, theta_x)?;
    let k = theta_y.len();
    let mut scores = vec![0.0; k];
    let mut sep = vec![0.0; k];
    let labels = set
        .extended_rows()
        .zip(set.targets())
        .map(|(x, &y)| {
            for (z, th) in scores.iter_mut().zip(theta_x) {
                *z = dot(th, x);
            }
            separator_losses(&scores, &mut sep);
            argmin_first(
                theta_y
                    .iter()
                    .zip(&sep)
                    .map(|(th, &l)| (y - dot(th, x)).powi(2) + rho * l),
            )
        })
        .collect();
    ModeSequence::new(labels, k)
}

/// Overall cost: fit error plus `rho` times separator violations, plus the
/// local regularizer and `rho * lambda * Σ ||θ_x||²`.
pub fn pwarx_objective(
    set: &RegressorSet,
    theta_y: &[Vec<f64>],
    theta_x: &[Vec<f64>],
    modes: &ModeSequence,
    h: &HyperParams,
) -> Result<f64> {
    check_parameters(set, theta_y, theta_x)?;
    if modes.len() != set.len() || modes.num_modes() != theta_y.len() {
        return Err(PwarxError::LengthMismatch {
            left: modes.len(),
            right: set.len(),
        });
    }
    let k = theta_y.len();
    let mut scores = vec![0.0; k];
    let mut data_term = 0.0;
    for ((x, &y), &s) in set.extended_rows().zip(set.targets()).zip(modes.labels()) {
        for (z, th) in scores.iter_mut().zip(theta_x) {
            *z = dot(th, x);
        }
        let zs = scores[s];
        let violation: f64 = scores
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != s)
            .map(|(_, &zj)| (zj - zs + 1.0).max(0.0).powi(2))
            .sum();
        data_term += (y - dot(&theta_y[s], x)).powi(2) + h.rho * violation;
    }
    let reg_y: f64 = theta_y.iter().map(|th| h.reg.penalty(th)).sum();
    let reg_x: f64 = theta_x.iter().map(|th| sq_norm(th)).sum::<f64>() * h.lambda;
    Ok(data_term + reg_y + h.rho * reg_x)
}

/// Coordinate descent from the initial labeling `s0` (its `num_modes` is `K`).
pub fn fit_pwarx(set: &RegressorSet, s0: &ModeSequence, h: &HyperParams) -> Result<FitResult> {
    h.validate()?;
    if s0.len() != set.len() {
        return Err(PwarxError::LengthMismatch {
            left: s0.len(),
            right: set.len(),
        });
    }
    let k = s0.num_modes();
    let d = set.dim();
    let mut modes = s0.clone();
    let mut theta_y: Option<Vec<Vec<f64>>> = None;
    let mut theta_x = vec![vec![0.0; d]; k];
    let mut trace = Vec::with_capacity(3 * h.max_outer);
    let mut best: Option<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>, ModeSequence, usize)> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < h.max_outer {
        iterations += 1;
        let ty = fit_local_models(set, &modes, &h.reg, &h.solver, theta_y.as_deref())?;
        trace.push(pwarx_objective(set, &ty, &theta_x, &modes, h)?);

        let problem = SeparatorProblem::from_regressors(set, &modes, h.lambda)?;
        theta_x = fit_separator(&problem, &h.solver, Some(&theta_x))?.theta_x;
        trace.push(pwarx_objective(set, &ty, &theta_x, &modes, h)?);

        let next = assign_modes(set, &ty, &theta_x, h.rho)?;
        let objective = pwarx_objective(set, &ty, &theta_x, &next, h)?;
        trace.push(objective);

        let stationary = next == modes;
        if stationary || best.as_ref().map_or(true, |b| objective < b.0) {
            best = Some((objective, ty.clone(), theta_x.clone(), next.clone(), iterations));
        }
        theta_y = Some(ty);
        if stationary {
            converged = true;
            break;
        }
        modes = next;
    }

    let (objective, ty, tx, modes, _) = best.expect("at least one outer iteration");
    Ok(FitResult {
        model: PwarxModel::new(set.n_a(), set.n_b(), ty, tx)?,
        modes,
        objective,
        outer_iterations: iterations,
        converged,
        objective_trace: trace,
    })
}

/// `count` labelings of length `len`, i.i.d. uniform over `0..k`, drawn from
/// a ChaCha8 stream seeded with `seed`.
pub fn initial_mode_sequences(count: usize, k: usize, len: usize, seed: u64) -> Result<Vec<ModeSequence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| ModeSequence::new((0..len).map(|_| rng.gen_range(0..k)).collect(), k))
        .collect()
}

/// Runs [`fit_pwarx`] from `h.restarts` random labelings and returns the
/// lowest-cost result (earliest restart on ties).
pub fn multi_start_fit(set: &RegressorSet, k: usize, h: &HyperParams) -> Result<FitResult> {
    h.validate()?;
    if k == 0 {
        return Err(PwarxError::InvalidParameter("K must be positive".into()));
    }
    let starts = initial_mode_sequences(h.restarts, k, set.len(), h.seed)?;
    let results: Vec<Result<FitResult>> = starts.par_iter().map(|s0| fit_pwarx(set, s0, h)).collect();
    let mut best: Option<FitResult> = None;
    for r in results {
        let r = r?;
        if best.as_ref().map_or(true, |b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// SplitMix64 mixing of `(base, stream)` into an independent seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
