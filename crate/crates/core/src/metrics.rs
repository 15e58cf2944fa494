use crate::error::{PwarxError, Result};

/// Best fit rate in percent, `100 * max(0, 1 - ||y - ŷ|| / ||y - ȳ||)`,
/// with `ȳ` the mean of `y_true`.
pub fn bfr(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(PwarxError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(PwarxError::DatasetTooShort {
            len: y_true.len(),
            required: 1,
        });
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let spread: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if spread == 0.0 {
        return Err(PwarxError::DenominatorZero);
    }
    let residual: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    Ok(100.0 * (1.0 - (residual / spread).sqrt()).max(0.0))
}

/// Signal-to-noise ratio in dB of measured outputs `y` with additive noise `e`.
pub fn snr_db(y: &[f64], e: &[f64]) -> Result<f64> {
    if y.len() != e.len() {
        return Err(PwarxError::LengthMismatch {
            left: y.len(),
            right: e.len(),
        });
    }
    let noise: f64 = e.iter().map(|v| v * v).sum();
    if noise <= 0.0 {
        return Err(PwarxError::ZeroNoisePower);
    }
    let signal: f64 = y.iter().zip(e).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(10.0 * (signal / noise).log10())
}
