//! PWARX model representation, mode inference and simulation.
//!
//! Every parameter vector uses the layout `[y-lags ascending, u-lags
//! ascending, affine term]`, matching the extended regressor `[x' 1]'`.
//! Modes are indexed from zero.

use serde::{Deserialize, Serialize};

use crate::error::{PwarxError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwarxModel {
    n_a: usize,
    n_b: usize,
    theta_y: Vec<Vec<f64>>,
    theta_x: Vec<Vec<f64>>,
}

impl PwarxModel {
    pub fn new(
        n_a: usize,
        n_b: usize,
        theta_y: Vec<Vec<f64>>,
        theta_x: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n_a + n_b == 0 {
            return Err(PwarxError::InvalidOrder { n_a, n_b });
        }
        if theta_y.is_empty() {
            return Err(PwarxError::InvalidParameter(
                "model needs at least one mode".into(),
            ));
        }
        if theta_x.len() != theta_y.len() {
            return Err(PwarxError::LengthMismatch {
                left: theta_y.len(),
                right: theta_x.len(),
            });
        }
        let dim = n_a + n_b + 1;
        for v in theta_y.iter().chain(&theta_x) {
            if v.len() != dim {
                return Err(PwarxError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if let Some(index) = v.iter().position(|c| !c.is_finite()) {
                return Err(PwarxError::NonFinite { index });
            }
        }
        Ok(Self {
            n_a,
            n_b,
            theta_y,
            theta_x,
        })
    }

    /// Number of modes `K`.
    pub fn num_modes(&self) -> usize {
        self.theta_y.len()
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    /// Parameter dimension `n_a + n_b + 1`.
    pub fn dim(&self) -> usize {
        self.n_a + self.n_b + 1
    }

    pub fn theta_y(&self) -> &[Vec<f64>] {
        &self.theta_y
    }

    pub fn theta_x(&self) -> &[Vec<f64>] {
        &self.theta_x
    }

    /// Active mode for regressor `x`: argmax of the separator scores, ties
    /// to the smallest index.
    pub fn infer_mode(&self, x: &[f64]) -> Result<usize> {
        self.check_regressor(x)?;
        Ok(self.mode_of(x))
    }

    /// One-step-ahead output for regressor `x`.
    pub fn predict_one_step(&self, x: &[f64]) -> Result<f64> {
        self.check_regressor(x)?;
        let k = self.mode_of(x);
        Ok(affine(&self.theta_y[k], x))
    }

    /// Open-loop simulation driven by `u`.
    ///
    /// The first predicted step is `t0 = max(n_a, n_b)`. The last `n_a`
    /// entries of `y_init` are the outputs `y_{t0-n_a} .. y_{t0-1}`; any
    /// earlier entries are ignored, so passing the measured prefix
    /// `y[..t0]` works. Afterwards every output lag is a previous
    /// prediction. Returns `ŷ_t` for `t = t0 .. u.len()`.
    pub fn simulate_open_loop(&self, u: &[f64], y_init: &[f64]) -> Result<Vec<f64>> {
        let (n_a, n_b) = (self.n_a, self.n_b);
        if y_init.len() < n_a {
            return Err(PwarxError::InsufficientInitialCondition {
                needed: n_a,
                got: y_init.len(),
            });
        }
        let t0 = n_a.max(n_b);
        if u.len() < t0 {
            return Err(PwarxError::DatasetTooShort {
                len: u.len(),
                required: t0,
            });
        }
        // history[i] holds y_{t0 - n_a + i}
        let mut history: Vec<f64> = y_init[y_init.len() - n_a..].to_vec();
        history.reserve(u.len() - t0);
        let mut x = vec![0.0; n_a + n_b];
        let mut out = Vec::with_capacity(u.len() - t0);
        for t in t0..u.len() {
            let h = history.len();
            for lag in 1..=n_a {
                x[lag - 1] = history[h - lag];
            }
            for lag in 1..=n_b {
                x[n_a + lag - 1] = u[t - lag];
            }
            let k = self.mode_of(&x);
            let y_hat = affine(&self.theta_y[k], &x);
            history.push(y_hat);
            out.push(y_hat);
        }
        Ok(out)
    }

    /// Reorders modes so that new mode `i` is old mode `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.num_modes())?;
        Ok(Self {
            n_a: self.n_a,
            n_b: self.n_b,
            theta_y: order.iter().map(|&k| self.theta_y[k].clone()).collect(),
            theta_x: order.iter().map(|&k| self.theta_x[k].clone()).collect(),
        })
    }

    fn check_regressor(&self, x: &[f64]) -> Result<()> {
        let n_x = self.n_a + self.n_b;
        if x.len() != n_x {
            return Err(PwarxError::DimensionMismatch {
                expected: n_x,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn mode_of(&self, x: &[f64]) -> usize {
        argmax_first(self.theta_x.iter().map(|th| affine(th, x)))
    }
}

/// `θ' [x' 1]'` with `θ` one longer than `x`.
#[inline]
pub(crate) fn affine(theta: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    theta[..n]
        .iter()
        .zip(x)
        .fold(theta[n], |acc, (a, b)| acc + a * b)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Index of the largest value, first one on ties.
pub(crate) fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, v) in values.enumerate() {
        if v > best_val || k == 0 {
            best = k;
            best_val = v;
        }
    }
    best
}

/// Index of the smallest value, first one on ties.
pub(crate) fn argmin_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (k, v) in values.enumerate() {
        if v < best_val || k == 0 {
            best = k;
            best_val = v;
        }
    }
    best
}

fn check_permutation(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if order.len() != k {
        return Err(PwarxError::LengthMismatch {
            left: order.len(),
            right: k,
        });
    }
    for &i in order {
        if i >= k || std::mem::replace(&mut seen[i], true) {
            return Err(PwarxError::InvalidParameter(format!(
                "{order:?} is not a permutation of 0..{k}"
            )));
        }
    }
    Ok(())
}

/// Per-sample mode labels in `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeSequence {
    labels: Vec<usize>,
    num_modes: usize,
}

impl ModeSequence {
    pub fn new(labels: Vec<usize>, num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(PwarxError::InvalidParameter("K must be positive".into()));
        }
        if let Some(&label) = labels.iter().find(|&&s| s >= num_modes) {
            return Err(PwarxError::InvalidLabel {
                label,
                k: num_modes,
            });
        }
        Ok(Self { labels, num_modes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Cluster sizes `#C_k`.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_modes];
        for &s in &self.labels {
            counts[s] += 1;
        }
        counts
    }

    /// Relabels consistently with [`PwarxModel::permuted`]`(order)`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.num_modes)?;
        let mut inverse = vec![0; self.num_modes];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        Ok(Self {
            labels: self.labels.iter().map(|&s| inverse[s]).collect(),
            num_modes: self.num_modes,
        })
    }
}
