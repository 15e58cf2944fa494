//! Input/output records and ARX regressor construction.

use crate::error::{PwarxError, Result};

/// Paired single-input single-output samples `u_t`, `y_t`, `t = 0..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    u: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(u: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if u.len() != y.len() {
            return Err(PwarxError::LengthMismatch {
                left: u.len(),
                right: y.len(),
            });
        }
        if u.is_empty() {
            return Err(PwarxError::DatasetTooShort { len: 0, required: 0 });
        }
        if let Some(index) = u
            .iter()
            .zip(&y)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(PwarxError::NonFinite { index });
        }
        Ok(Self { u, y })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Sample count `T`.
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Splits at sample `at`; both halves keep their own time origin.
    pub fn split_at(&self, at: usize) -> Result<(Dataset, Dataset)> {
        let (u0, u1) = self.u.split_at(at.min(self.len()));
        let (y0, y1) = self.y.split_at(at.min(self.len()));
        Ok((
            Dataset::new(u0.to_vec(), y0.to_vec())?,
            Dataset::new(u1.to_vec(), y1.to_vec())?,
        ))
    }
}

/// Regressor matrix for a fixed ARX order.
///
/// Row `i` corresponds to time `t = offset + i` and holds
/// `[y_{t-1} .. y_{t-n_a}, u_{t-1} .. u_{t-n_b}]`; the target is `y_t`.
/// Rows are stored extended with a trailing `1` so the affine term can be
/// read without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSet {
    n_a: usize,
    n_b: usize,
    offset: usize,
    extended: Vec<f64>,
    targets: Vec<f64>,
}

impl RegressorSet {
    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    /// Regressor dimension `n_x = n_a + n_b`.
    pub fn n_x(&self) -> usize {
        self.n_a + self.n_b
    }

    /// Dimension of the extended regressor (and of every parameter vector).
    pub fn dim(&self) -> usize {
        self.n_a + self.n_b + 1
    }

    /// Index of the first time step with a complete regressor.
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Number of usable rows, `T - max(n_a, n_b)`.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Regressor `x_t` of row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.extended[i * d..i * d + d - 1]
    }

    /// Extended regressor `[x_t' 1]'` of row `i`.
    pub fn extended_row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.extended[i * d..(i + 1) * d]
    }

    /// All extended rows back to back, row-major.
    pub fn extended_flat(&self) -> &[f64] {
        &self.extended
    }

    pub fn extended_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.extended.chunks_exact(self.dim())
    }
}

/// Builds the ARX regressors of order `(n_a, n_b)` from `data`.
pub fn build_regressors(data: &Dataset, n_a: usize, n_b: usize) -> Result<RegressorSet> {
    if n_a + n_b == 0 {
        return Err(PwarxError::InvalidOrder { n_a, n_b });
    }
    let offset = n_a.max(n_b);
    let len = data.len();
    if len <= offset {
        return Err(PwarxError::DatasetTooShort {
            len,
            required: offset,
        });
    }
    let dim = n_a + n_b + 1;
    let rows = len - offset;
    let (u, y) = (data.u(), data.y());
    let mut extended = Vec::with_capacity(rows * dim);
    for t in offset..len {
        extended.extend((1..=n_a).map(|lag| y[t - lag]));
        extended.extend((1..=n_b).map(|lag| u[t - lag]));
        extended.push(1.0);
    }
    Ok(RegressorSet {
        n_a,
        n_b,
        offset,
        extended,
        targets: y[offset..].to_vec(),
    })
}
