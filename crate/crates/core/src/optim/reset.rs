use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ParamMatrix, ParamSet};
use crate::spectral::{SpectralEstimator, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Below this estimated radius a matrix is treated as zero and cannot be rescaled.
pub const MIN_RESCALABLE_RADIUS: f64 = 1e-12;

/// When and to what value the recurrent matrix's spectral radius is reset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSchedule {
    /// Target spectral radius.
    pub lambda: f64,
    /// Reset after every `interval` optimizer steps.
    pub interval: usize,
}

impl SpectralSchedule {
    pub fn every_step(lambda: f64) -> Self {
        Self { lambda, interval: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.interval == 0 {
            return Err(Error::InvalidParameter("spectral reset interval must be >= 1".into()));
        }
        Ok(())
    }

    /// Whether a reset is due after the optimizer step with zero-based index `step`.
    pub fn due(&self, step: u64) -> bool {
        (step + 1) % self.interval as u64 == 0
    }
}

/// `w * (lambda / rho(w))`, using a fresh estimator.
pub fn spectral_reset(w: &ParamMatrix, lambda: f64, tol: f64) -> Result<ParamMatrix> {
    let mut estimator = SpectralEstimator::new();
    spectral_reset_with(&mut estimator, w, lambda, tol, DEFAULT_MAX_ITER)
}

pub fn spectral_reset_with(
    estimator: &mut SpectralEstimator,
    w: &ParamMatrix,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ParamMatrix> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let est = estimator.estimate(w, tol, max_iter)?;
    if est.radius < MIN_RESCALABLE_RADIUS {
        return Err(Error::DegenerateSpectrum(est.radius));
    }
    Ok(w.scaled(lambda / est.radius))
}

/// Reset the recurrent matrix of `params` in place, if it has one.
pub(crate) fn reset_recurrent(
    estimator: &mut SpectralEstimator,
    params: &mut ParamSet,
    lambda: f64,
) -> Result<()> {
    if let Some(idx) = params.recurrent_index() {
        let rescaled = spectral_reset_with(estimator, &params[idx], lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        params[idx] = rescaled;
    }
    Ok(())
}
