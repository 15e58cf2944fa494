//! Synthetic three-mode PWARX benchmark and Monte Carlo driver.
//!
//! The data-generating system is
//!
//! ```text
//! y_t = [-0.4  1    1.5] x̃_t + e_t   if [4 -1 10] x̃_t < 0
//!       [ 0.5 -1   -0.5] x̃_t + e_t   else if [5 1 -6] x̃_t <= 0
//!       [-0.3  0.5 -1.7] x̃_t + e_t   otherwise
//! ```
//!
//! with `x̃_t = [y_{t-1} u_{t-1} 1]'`, `u_t ~ U[-4, 4]`, `e_t ~ U[-0.8, 0.8]`
//! and `y_0 = 0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coord_descent::{derive_seed, HyperParams, RegularizerKind};
use crate::data::Dataset;
use crate::error::{PwarxError, Result};
use crate::metrics::snr_db;
use crate::model::{dot, PwarxModel};
use crate::structure::{select_num_modes, select_order};

pub const TRUE_THETA: [[f64; 3]; 3] = [[-0.4, 1.0, 1.5], [0.5, -1.0, -0.5], [-0.3, 0.5, -1.7]];
pub const GUARD_1: [f64; 3] = [4.0, -1.0, 10.0];
pub const GUARD_2: [f64; 3] = [5.0, 1.0, -6.0];
pub const INPUT_RANGE: f64 = 4.0;
pub const NOISE_RANGE: f64 = 0.8;

/// Ground-truth mode (zero-based) of an extended regressor `[y_{t-1}, u_{t-1}, 1]`.
/// Guards are tested in order; the first match wins.
pub fn true_mode(x_ext: &[f64; 3]) -> usize {
    if dot(&GUARD_1, x_ext) < 0.0 {
        0
    } else if dot(&GUARD_2, x_ext) <= 0.0 {
        1
    } else {
        2
    }
}

/// The generating system as a PWARX model. Its separator is an exact
/// max-of-affine encoding of the guards where they do not overlap; it is
/// used for simulation checks, not as an estimation target.
pub fn true_parameters() -> Vec<Vec<f64>> {
    TRUE_THETA.iter().map(|r| r.to_vec()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedExample {
    pub data: Dataset,
    /// Zero-based mode of every sample `t >= 1`, aligned with first-order
    /// regressor rows.
    pub modes: Vec<usize>,
    /// Noise realization, `e_0 = 0`.
    pub noise: Vec<f64>,
}

pub fn generate_example(t: usize, seed: u64) -> Result<GeneratedExample> {
    generate_with_noise(t, seed, NOISE_RANGE)
}

/// As [`generate_example`] with noise `U[-amplitude, amplitude]`
/// (`amplitude = 0` gives noiseless data with the same inputs).
pub fn generate_with_noise(t: usize, seed: u64, amplitude: f64) -> Result<GeneratedExample> {
    if t < 2 {
        return Err(PwarxError::DatasetTooShort { len: t, required: 1 });
    }
    if !(amplitude >= 0.0) {
        return Err(PwarxError::InvalidParameter("noise amplitude must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-INPUT_RANGE..=INPUT_RANGE)).collect();
    let draws: Vec<f64> = (1..t).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut noise = vec![0.0; t];
    for (e, d) in noise[1..].iter_mut().zip(&draws) {
        *e = amplitude * d;
    }
    let mut y = vec![0.0; t];
    let mut modes = Vec::with_capacity(t - 1);
    for i in 1..t {
        let x = [y[i - 1], u[i - 1], 1.0];
        let k = true_mode(&x);
        modes.push(k);
        y[i] = dot(&TRUE_THETA[k], &x) + noise[i];
    }
    Ok(GeneratedExample {
        data: Dataset::new(u, y)?,
        modes,
        noise,
    })
}

/// Normalized boundary `θ_{x,i} - θ_{x,j}` for each pair: scaled so the
/// first input-lag coefficient (index `n_a`) has magnitude one, with the
/// sign chosen to make the first output-lag coefficient positive.
pub fn normalize_boundaries(theta_x: &[Vec<f64>], pairs: &[(usize, usize)], n_a: usize) -> Result<Vec<Vec<f64>>> {
    if theta_x.len() < 2 {
        return Err(PwarxError::InvalidParameter("need at least two modes".into()));
    }
    pairs
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (
                theta_x.get(i).ok_or(PwarxError::InvalidLabel { label: i, k: theta_x.len() })?,
                theta_x.get(j).ok_or(PwarxError::InvalidLabel { label: j, k: theta_x.len() })?,
            );
            let g: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
            let scale = g.get(n_a).copied().unwrap_or(0.0).abs();
            if scale < 1e-12 {
                return Err(PwarxError::ZeroNormalizer);
            }
            let pivot = if n_a > 0 { g[0] } else { g[n_a] };
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            Ok(g.iter().map(|v| sign * v / scale).collect())
        })
        .collect()
}

/// Embeds a first-order parameter vector `[a, b, c]` into order `(n_a, n_b)`
/// with zero coefficients on the extra lags.
pub fn embed_first_order(theta: &[f64; 3], n_a: usize, n_b: usize) -> Vec<f64> {
    let mut v = vec![0.0; n_a + n_b + 1];
    if n_a > 0 {
        v[0] = theta[0];
    }
    if n_b > 0 {
        v[n_a] = theta[1];
    }
    v[n_a + n_b] = theta[2];
    v
}

/// Mode ordering matching `truth`: the returned permutation puts, at
/// position `i < truth.len()`, the estimated mode closest to `truth[i]`
/// (minimal total Euclidean distance, exhaustive search), followed by the
/// unmatched modes in index order. `None` when there are fewer estimated
/// modes than true ones.
pub fn align_modes(estimated: &[Vec<f64>], truth: &[Vec<f64>]) -> Option<Vec<usize>> {
    let k = estimated.len();
    if k < truth.len() {
        return None;
    }
    let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() };
    let mut best: Option<(f64, Vec<usize>)> = None;
    for pick in (0..k).permutations(truth.len()) {
        let cost: f64 = pick.iter().zip(truth).map(|(&e, t)| dist(&estimated[e], t)).sum();
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, pick));
        }
    }
    let mut order = best?.1;
    let rest: Vec<usize> = (0..k).filter(|i| !order.contains(i)).collect();
    order.extend(rest);
    Some(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SelectK,
    SelectOrder,
}

impl Task {
    fn regularizer(&self, reg: &RegularizerKind) -> RegularizerKind {
        let (mu, nu) = (reg.mu(), reg.nu());
        match self {
            Task::SelectK => RegularizerKind::RidgeLinf { mu, nu },
            Task::SelectOrder => RegularizerKind::ElasticNet { mu, nu },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub k: usize,
    pub n_a: usize,
    pub n_b: usize,
    /// Final model with modes reordered to match the true system when
    /// `aligned`.
    pub model: PwarxModel,
    pub aligned: bool,
    /// Normalized first and second separators (aligned runs only).
    pub boundaries: Option<Vec<Vec<f64>>>,
    pub objective: f64,
    pub snr_db: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub data_seed: u64,
    pub fit_seed: u64,
    pub outcome: std::result::Result<RunOutcome, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub task: Task,
    pub samples: usize,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// Mode (parameter table) or separator (boundary table), zero-based.
    pub group: usize,
    pub coefficient: String,
    pub truth: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

fn run_one(task: Task, t: usize, data_seed: u64, h: &HyperParams) -> Result<RunOutcome> {
    let example = generate_example(t, data_seed)?;
    let snr = snr_db(example.data.y(), &example.noise)?;
    let (k, n_a, n_b, fit, iterations) = match task {
        Task::SelectK => {
            let sel = select_num_modes(&example.data, 1, 1, h)?;
            (sel.k, 1, 1, sel.fit, sel.trace.records.len())
        }
        Task::SelectOrder => {
            let sel = select_order(&example.data, TRUE_THETA.len(), h)?;
            (TRUE_THETA.len(), sel.n_a, sel.n_b, sel.fit, sel.trace.records.len())
        }
    };
    let truth: Vec<Vec<f64>> = TRUE_THETA.iter().map(|th| embed_first_order(th, n_a, n_b)).collect();
    let (model, aligned) = match align_modes(fit.model.theta_y(), &truth) {
        Some(order) => (fit.model.permuted(&order)?, true),
        None => (fit.model.clone(), false),
    };
    let boundaries = if aligned {
        normalize_boundaries(model.theta_x(), &[(0, 1), (1, 2)], n_a).ok()
    } else {
        None
    };
    Ok(RunOutcome {
        k,
        n_a,
        n_b,
        model,
        aligned,
        boundaries,
        objective: fit.objective,
        snr_db: snr,
        iterations,
    })
}

/// Runs `runs` independent experiments on fresh datasets of `t` samples.
///
/// Run `r` draws its data with `derive_seed(h.seed, 2r)` and its restarts
/// with `derive_seed(h.seed, 2r + 1)`. Failed runs are recorded, not fatal.
pub fn run_montecarlo(task: Task, runs: usize, t: usize, h: &HyperParams) -> Result<MonteCarloReport> {
    if runs == 0 {
        return Err(PwarxError::InvalidParameter("runs must be at least 1".into()));
    }
    let h = h.with_reg(task.regularizer(&h.reg));
    h.validate()?;
    let records: Vec<RunRecord> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let data_seed = derive_seed(h.seed, 2 * r as u64);
            let fit_seed = derive_seed(h.seed, 2 * r as u64 + 1);
            let outcome = run_one(task, t, data_seed, &h.with_seed(fit_seed)).map_err(|e| e.to_string());
            RunRecord {
                run: r,
                data_seed,
                fit_seed,
                outcome,
            }
        })
        .collect();
    Ok(MonteCarloReport {
        task,
        samples: t,
        runs: records,
    })
}

fn coefficient_names(n_a: usize, n_b: usize) -> Vec<String> {
    (1..=n_a)
        .map(|i| format!("y(t-{i})"))
        .chain((1..=n_b).map(|i| format!("u(t-{i})")))
        .chain(std::iter::once("1".to_string()))
        .collect()
}

/// Re-embeds a vector of order `(n_a, n_b)` into a larger order.
fn pad(v: &[f64], n_a: usize, n_b: usize, to_a: usize, to_b: usize) -> Vec<f64> {
    let mut out = vec![0.0; to_a + to_b + 1];
    out[..n_a].copy_from_slice(&v[..n_a]);
    out[to_a..to_a + n_b].copy_from_slice(&v[n_a..n_a + n_b]);
    out[to_a + to_b] = v[n_a + n_b];
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl MonteCarloReport {
    pub fn outcomes(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Runs entering the parameter tables: the true number of modes was
    /// retrieved and the modes could be aligned.
    pub fn successful(&self) -> Vec<&RunOutcome> {
        self.outcomes()
            .filter(|o| o.aligned && o.k == TRUE_THETA.len())
            .collect()
    }

    /// Selection frequencies: `K` for mode-count runs, `n_a` and `n_b` for
    /// order runs. Keys are `(quantity, value)`.
    pub fn histogram(&self) -> BTreeMap<(String, usize), usize> {
        let mut h = BTreeMap::new();
        for o in self.outcomes() {
            match self.task {
                Task::SelectK => *h.entry(("K".to_string(), o.k)).or_insert(0) += 1,
                Task::SelectOrder => {
                    *h.entry(("n_a".to_string(), o.n_a)).or_insert(0) += 1;
                    *h.entry(("n_b".to_string(), o.n_b)).or_insert(0) += 1;
                }
            }
        }
        h
    }

    fn padded_order(&self) -> (usize, usize) {
        self.successful()
            .iter()
            .fold((1, 1), |(a, b), o| (a.max(o.n_a), b.max(o.n_b)))
    }

    /// Mean and standard deviation of every local parameter over the
    /// successful runs, zero-padded to the largest selected order.
    pub fn parameter_table(&self) -> Vec<TableRow> {
        let runs = self.successful();
        let (to_a, to_b) = self.padded_order();
        let names = coefficient_names(to_a, to_b);
        let mut rows = Vec::new();
        for (k, truth) in TRUE_THETA.iter().enumerate() {
            let truth = embed_first_order(truth, to_a, to_b);
            let samples: Vec<Vec<f64>> = runs
                .iter()
                .map(|o| pad(&o.model.theta_y()[k], o.n_a, o.n_b, to_a, to_b))
                .collect();
            for (i, name) in names.iter().enumerate() {
                let col: Vec<f64> = samples.iter().map(|v| v[i]).collect();
                let (mean, std) = mean_std(&col);
                rows.push(TableRow {
                    group: k,
                    coefficient: name.clone(),
                    truth: truth[i],
                    mean,
                    std,
                    count: col.len(),
                });
            }
        }
        rows
    }

    /// Mean and standard deviation of the normalized separators.
    pub fn boundary_table(&self) -> Vec<TableRow> {
        let runs: Vec<&RunOutcome> = self.successful().into_iter().filter(|o| o.boundaries.is_some()).collect();
        let (to_a, to_b) = self.padded_order();
        let names = coefficient_names(to_a, to_b);
        let mut rows = Vec::new();
        for (s, truth) in [GUARD_1, GUARD_2].iter().enumerate() {
            let truth = embed_first_order(truth, to_a, to_b);
            let samples: Vec<Vec<f64>> = runs
                .iter()
                .map(|o| pad(&o.boundaries.as_ref().unwrap()[s], o.n_a, o.n_b, to_a, to_b))
                .collect();
            for (i, name) in names.iter().enumerate() {
                let col: Vec<f64> = samples.iter().map(|v| v[i]).collect();
                let (mean, std) = mean_std(&col);
                rows.push(TableRow {
                    group: s,
                    coefficient: name.clone(),
                    truth: truth[i],
                    mean,
                    std,
                    count: col.len(),
                });
            }
        }
        rows
    }

    pub fn parameter_csv(&self) -> String {
        table_csv("mode", &self.parameter_table())
    }

    pub fn boundary_csv(&self) -> String {
        table_csv("separator", &self.boundary_table())
    }

    pub fn histogram_csv(&self) -> String {
        let total = self.outcomes().count().max(1) as f64;
        let mut out = String::from("quantity,value,frequency_percent\n");
        for ((q, v), c) in self.histogram() {
            let _ = writeln!(out, "{q},{v},{:.17e}", 100.0 * c as f64 / total);
        }
        out
    }
}

fn table_csv(group: &str, rows: &[TableRow]) -> String {
    let mut out = format!("{group},coefficient,true,mean,std,count\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.17e},{:.17e},{:.17e},{}",
            r.group + 1,
            r.coefficient,
            r.truth,
            r.mean,
            r.std,
            r.count
        );
    }
    out
}
