//! Exact proximal operators used by the local-model solvers.

/// `sign(v) * max(|v| - tau, 0)`.
#[inline]
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Euclidean projection of `v` onto `{w : ||w||_1 <= radius}`.
///
/// Sort-based exact method: find the soft threshold `theta` such that the
/// thresholded magnitudes sum to `radius`.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    debug_assert!(radius >= 0.0);
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if m - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&x| soft_threshold(x, theta)).collect()
}

/// Proximal operator of `tau * ||.||_inf`:
/// `argmin_x 0.5 ||x - v||^2 + tau ||x||_inf`.
///
/// By Moreau decomposition this is `v - P(v)` where `P` projects onto the
/// l1 ball of radius `tau`; the whole vector collapses to zero when
/// `||v||_1 <= tau`.
pub fn prox_linf(v: &[f64], tau: f64) -> Vec<f64> {
    debug_assert!(tau >= 0.0);
    if tau == 0.0 {
        return v.to_vec();
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= tau {
        return vec![0.0; v.len()];
    }
    let p = project_l1_ball(v, tau);
    v.iter().zip(&p).map(|(a, b)| a - b).collect()
}
