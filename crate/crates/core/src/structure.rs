//! Structure selection by shrinkage.
//!
//! [`select_num_modes`] starts from `K_max` modes and repeatedly refits
//! with the `L1-∞` group penalty, dropping modes whose parameters vanish
//! (or, when none do, modes holding at most 1% of the data).
//! [`select_order`] starts from `(n_a_max, n_b_max)` and repeatedly refits
//! with the elastic net, shrinking the orders to the number of surviving
//! lag coefficients. Both finish with a ridge-only refit.

use serde::{Deserialize, Serialize};

use crate::coord_descent::{derive_seed, multi_start_fit, FitResult, HyperParams, RegularizerKind};
use crate::data::{build_regressors, Dataset};
use crate::error::{PwarxError, Result};
use crate::model::ModeSequence;
use crate::solvers::linf;

/// Modes whose parameter vector has `||θ||_∞ <= delta`.
pub fn detect_redundant(theta_y: &[Vec<f64>], delta: f64) -> Vec<usize> {
    theta_y
        .iter()
        .enumerate()
        .filter(|(_, th)| linf(th) <= delta)
        .map(|(k, _)| k)
        .collect()
}

/// Modes holding at most 1% of the `total` samples.
pub fn detect_empty_clusters(modes: &ModeSequence, total: usize) -> Vec<usize> {
    modes
        .counts()
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c * 100 <= total)
        .map(|(k, _)| k)
        .collect()
}

/// Number of retained lags, maximized over modes and floored at one:
/// a y-lag (u-lag) counts when its coefficient has magnitude `>= delta`.
/// The affine term is never counted.
pub fn count_active_orders(theta_y: &[Vec<f64>], n_a: usize, n_b: usize, delta: f64) -> Result<(usize, usize)> {
    let (na, nb) = raw_active_orders(theta_y, n_a, n_b, delta)?;
    Ok((na.max(1), nb.max(1)))
}

fn raw_active_orders(theta_y: &[Vec<f64>], n_a: usize, n_b: usize, delta: f64) -> Result<(usize, usize)> {
    let dim = n_a + n_b + 1;
    let mut best = (0, 0);
    for th in theta_y {
        if th.len() != dim {
            return Err(PwarxError::DimensionMismatch {
                expected: dim,
                found: th.len(),
            });
        }
        let na = th[..n_a].iter().filter(|c| c.abs() >= delta).count();
        let nb = th[n_a..n_a + n_b].iter().filter(|c| c.abs() >= delta).count();
        best = (best.0.max(na), best.1.max(nb));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionRecord {
    pub iteration: usize,
    pub k_in: usize,
    pub k_out: usize,
    pub redundant: Vec<usize>,
    pub empty: Vec<usize>,
    pub objective: f64,
    #[serde(skip)]
    pub fit: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KSelectionTrace {
    pub records: Vec<KSelectionRecord>,
    pub final_k: usize,
    /// Shrinkage would have removed every mode; `K` was held at one.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    pub fit: FitResult,
    pub trace: KSelectionTrace,
}

/// Selects the number of modes for fixed orders `(n_a, n_b)`.
///
/// `h.reg` must be [`RegularizerKind::RidgeLinf`]. Iteration `j` uses the
/// multi-start seed `derive_seed(h.seed, j)`; the final ridge refit uses
/// stream `0`.
pub fn select_num_modes(data: &Dataset, n_a: usize, n_b: usize, h: &HyperParams) -> Result<KSelection> {
    h.validate()?;
    if !matches!(h.reg, RegularizerKind::RidgeLinf { .. }) {
        return Err(PwarxError::InvalidParameter(
            "mode-count selection needs the ridge + L1-inf regularizer".into(),
        ));
    }
    if h.k_max == 0 {
        return Err(PwarxError::InvalidParameter("k_max must be at least 1".into()));
    }
    let set = build_regressors(data, n_a, n_b)?;
    let total = data.len();
    let mut trace = KSelectionTrace::default();
    let mut k = h.k_max;
    for j in 1.. {
        let fit = multi_start_fit(&set, k, &h.with_seed(derive_seed(h.seed, j as u64)))?;
        let redundant = detect_redundant(fit.model.theta_y(), h.delta);
        let (empty, removed) = if redundant.is_empty() {
            let empty = detect_empty_clusters(&fit.modes, total);
            let n = empty.len();
            (empty, n)
        } else {
            (Vec::new(), redundant.len())
        };
        let mut k_out = k - removed;
        if k_out == 0 {
            k_out = 1;
            trace.clamped = true;
        }
        trace.records.push(KSelectionRecord {
            iteration: j,
            k_in: k,
            k_out,
            redundant,
            empty,
            objective: fit.objective,
            fit: Some(fit),
        });
        if k_out == k {
            break;
        }
        k = k_out;
    }
    trace.final_k = k;
    let refit = h.with_reg(h.reg.without_shrinkage()).with_seed(derive_seed(h.seed, 0));
    let fit = multi_start_fit(&set, k, &refit)?;
    Ok(KSelection { k, fit, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelectionRecord {
    pub iteration: usize,
    pub n_a_in: usize,
    pub n_b_in: usize,
    pub n_a_out: usize,
    pub n_b_out: usize,
    pub objective: f64,
    #[serde(skip)]
    pub fit: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OrderSelectionTrace {
    pub records: Vec<OrderSelectionRecord>,
    pub final_n_a: usize,
    pub final_n_b: usize,
    /// Some iteration shrank every lag of an output or input; the order
    /// was held at one.
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    pub n_a: usize,
    pub n_b: usize,
    pub fit: FitResult,
    pub trace: OrderSelectionTrace,
}

/// Selects the orders `(n_a, n_b)` for a fixed number of modes `k`.
///
/// `h.reg` must be [`RegularizerKind::ElasticNet`]. When an order shrinks,
/// the shortest delays are kept.
pub fn select_order(data: &Dataset, k: usize, h: &HyperParams) -> Result<OrderSelection> {
    h.validate()?;
    if !matches!(h.reg, RegularizerKind::ElasticNet { .. }) {
        return Err(PwarxError::InvalidParameter(
            "order selection needs the elastic-net regularizer".into(),
        ));
    }
    if h.n_a_max == 0 || h.n_b_max == 0 {
        return Err(PwarxError::InvalidParameter(
            "n_a_max and n_b_max must be at least 1".into(),
        ));
    }
    let mut trace = OrderSelectionTrace::default();
    let (mut n_a, mut n_b) = (h.n_a_max, h.n_b_max);
    for j in 1.. {
        let set = build_regressors(data, n_a, n_b)?;
        let fit = multi_start_fit(&set, k, &h.with_seed(derive_seed(h.seed, j as u64)))?;
        let (na_raw, nb_raw) = raw_active_orders(fit.model.theta_y(), n_a, n_b, h.delta)?;
        if na_raw == 0 || nb_raw == 0 {
            trace.floored = true;
        }
        let (na_out, nb_out) = (na_raw.max(1), nb_raw.max(1));
        trace.records.push(OrderSelectionRecord {
            iteration: j,
            n_a_in: n_a,
            n_b_in: n_b,
            n_a_out: na_out,
            n_b_out: nb_out,
            objective: fit.objective,
            fit: Some(fit),
        });
        if (na_out, nb_out) == (n_a, n_b) {
            break;
        }
        (n_a, n_b) = (na_out, nb_out);
    }
    trace.final_n_a = n_a;
    trace.final_n_b = n_b;
    let set = build_regressors(data, n_a, n_b)?;
    let refit = h.with_reg(h.reg.without_shrinkage()).with_seed(derive_seed(h.seed, 0));
    let fit = multi_start_fit(&set, k, &refit)?;
    Ok(OrderSelection { n_a, n_b, fit, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn redundant_uses_inclusive_threshold() {
        let th = vec![vec![0.005, -0.002, 0.009], vec![0.5, 0.0, 0.0], vec![0.01, -0.01, 0.0]];
        assert_eq!(detect_redundant(&th, 0.01), vec![0, 2]);
        assert!(detect_redundant(&th[1..2], 0.01).is_empty());
    }

    #[test]
    fn empty_cluster_boundary() {
        let mut labels = vec![0; 1980];
        labels.extend(vec![1; 20]);
        let s = ModeSequence::new(labels, 2).unwrap();
        assert_eq!(detect_empty_clusters(&s, 2000), vec![1]);

        let mut labels = vec![0; 1979];
        labels.extend(vec![1; 21]);
        let s = ModeSequence::new(labels, 3).unwrap();
        // mode 2 has no samples at all
        assert_eq!(detect_empty_clusters(&s, 2000), vec![2]);

        let s = ModeSequence::new((0..300).map(|t| t % 3).collect(), 3).unwrap();
        assert!(detect_empty_clusters(&s, 300).is_empty());
    }

    #[test]
    fn order_counting() {
        let th = vec![vec![0.5, 0.005, -1.0, 0.002, 1.5]];
        assert_eq!(count_active_orders(&th, 2, 2, 0.01).unwrap(), (1, 1));
        let th = vec![vec![0.5, 0.3, -1.0, 0.0, 1.5], vec![0.5, 0.0, -1.0, 0.0, 1.5]];
        assert_eq!(count_active_orders(&th, 2, 2, 0.01).unwrap(), (2, 1));
        let th = vec![vec![0.001, 0.0, 0.0, -0.009, 7.0]];
        assert_eq!(count_active_orders(&th, 2, 2, 0.01).unwrap(), (1, 1));
        assert!(count_active_orders(&th, 3, 2, 0.01).is_err());
    }

    proptest! {
        #[test]
        fn detectors_match_set_definitions(
            values in prop::collection::vec(prop::collection::vec(-0.05f64..0.05, 3), 1..8),
            labels in prop::collection::vec(0usize..6, 1..400),
            delta in 0.001f64..0.05,
        ) {
            let redundant = detect_redundant(&values, delta);
            for (k, v) in values.iter().enumerate() {
                let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert_eq!(redundant.contains(&k), max <= delta);
            }
            let modes = ModeSequence::new(labels.clone(), 6).unwrap();
            let empty = detect_empty_clusters(&modes, labels.len());
            for k in 0..6 {
                let c = labels.iter().filter(|&&s| s == k).count();
                prop_assert_eq!(empty.contains(&k), (c as f64) <= 0.01 * labels.len() as f64 + 1e-9);
            }
        }

        #[test]
        fn order_count_is_permutation_invariant(
            values in prop::collection::vec(prop::collection::vec(-0.05f64..0.05, 5), 1..5),
        ) {
            let a = count_active_orders(&values, 2, 2, 0.01).unwrap();
            let mut rev = values.clone();
            rev.reverse();
            prop_assert_eq!(a, count_active_orders(&rev, 2, 2, 0.01).unwrap());
        }
    }
}
