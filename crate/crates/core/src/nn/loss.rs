//! Loss functions.

use crate::error::{Error, Result};
use crate::matrix::ParamMatrix;

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Mean negative log-probability of the true class.
///
/// `probs` is `samples x classes`. Probabilities are clamped to
/// `[PROB_FLOOR, 1]`; anything still outside `(0, 1]` after clamping (NaN,
/// values above one) is an error.
pub fn bce_loss(probs: &ParamMatrix, labels: &[usize]) -> Result<f64> {
    if probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    if probs.rows() == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= probs.cols() {
            return Err(Error::Shape(format!("label {label} with {} classes", probs.cols())));
        }
        let raw = probs.get(i, label);
        let p = if raw.is_nan() { raw } else { raw.max(PROB_FLOOR) };
        if !(p > 0.0 && p <= 1.0 + 1e-12) {
            return Err(Error::NonFinite(format!("probability {p} for sample {i}")));
        }
        total -= p.min(1.0).ln();
    }
    Ok(total / labels.len() as f64)
}

/// Mean of squared differences over all elements.
pub fn mse_loss(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Shape("empty prediction set".into()));
    }
    Ok(sum_sq_diff(preds, targets) / preds.len() as f64)
}

#[inline]
pub(crate) fn sum_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
