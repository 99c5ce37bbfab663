//! Plain and spectral weight perturbation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::perturbation::check_sigma_sq;
use super::regret::{finish, perturbed_loss};
use super::reset::reset_recurrent;
use super::{sample_perturbation, PerturbationDraw, RegretScore, SpectralSchedule, StepInfo};
use crate::error::{Error, Result};
use crate::matrix::ParamSet;
use crate::nn::Objective;
use crate::spectral::SpectralEstimator;

/// `theta^l <- theta^l - coeffs[l] * xi^l` for every layer.
pub(crate) fn apply_update(params: &mut ParamSet, draw: &PerturbationDraw, coeffs: &[f64]) -> Result<()> {
    debug_assert_eq!(coeffs.len(), params.len());
    for (l, (xi, &c)) in draw.noise.iter().zip(coeffs).enumerate() {
        params[l].as_mut_slice().iter_mut().zip(xi.as_slice()).for_each(|(t, x)| *t -= c * x);
    }
    if params.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("parameters after perturbation update".into()))
    }
}

/// Per-layer step coefficient `eta * R / sigma^2`, averaged over `draws`.
#[inline]
pub(crate) fn step_coefficient(eta: f64, regret: f64, sigma_sq: f64, draws: usize) -> f64 {
    eta * regret / (sigma_sq * draws as f64)
}

/// `theta <- theta - (eta / sigma^2) * R * xi`, all layers at once.
pub fn wp_update(params: &mut ParamSet, draw: &PerturbationDraw, regret: RegretScore, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    draw.check_shapes(params)?;
    let c = step_coefficient(eta, regret.value(), draw.sigma_sq, 1);
    apply_update(params, draw, &vec![c; params.len()])
}

/// The perturbations of one optimizer step and the regret each produced.
pub(crate) struct PerturbationRound {
    pub base_loss: f64,
    pub draws: Vec<(PerturbationDraw, f64)>,
}

impl PerturbationRound {
    /// Sample `count` draws and evaluate the regret of each. The base loss is
    /// computed once.
    pub fn run<O: Objective + ?Sized, R: Rng + ?Sized>(
        objective: &O,
        params: &ParamSet,
        sigma_sq: f64,
        count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let base_loss = objective.loss(params)?;
        let mut draws = Vec::with_capacity(count);
        for _ in 0..count {
            let draw = sample_perturbation(params, sigma_sq, rng)?;
            let eval = finish(base_loss, perturbed_loss(objective, params, &draw)?)?;
            draws.push((draw, eval.regret.value()));
        }
        Ok(Self { base_loss, draws })
    }

    pub fn mean_regret(&self) -> f64 {
        self.draws.iter().map(|(_, r)| r).sum::<f64>() / self.draws.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WpConfig {
    pub eta: f64,
    pub sigma_sq: f64,
    /// `Some` turns plain WP into Spectral WP.
    pub spectral: Option<SpectralSchedule>,
    /// Perturbations averaged per step; 1 is the single-draw rule.
    #[serde(default = "one")]
    pub draws_per_step: usize,
}

fn one() -> usize {
    1
}

impl WpConfig {
    pub fn new(eta: f64, sigma_sq: f64) -> Self {
        Self { eta, sigma_sq, spectral: None, draws_per_step: 1 }
    }

    pub fn with_spectral(mut self, lambda: f64) -> Self {
        self.spectral = Some(SpectralSchedule::every_step(lambda));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        check_sigma_sq(self.sigma_sq)?;
        if self.draws_per_step == 0 {
            return Err(Error::InvalidParameter("draws_per_step must be >= 1".into()));
        }
        if let Some(s) = &self.spectral {
            s.validate()?;
        }
        Ok(())
    }
}

/// Fixed-learning-rate weight perturbation, optionally with spectral resets.
#[derive(Clone, Debug)]
pub struct WeightPerturbation {
    pub config: WpConfig,
    step: u64,
    estimator: SpectralEstimator,
}

impl WeightPerturbation {
    pub fn new(config: WpConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, step: 0, estimator: SpectralEstimator::new() })
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Set the recurrent matrix to the target radius before training starts.
    pub fn prepare(&mut self, params: &mut ParamSet) -> Result<()> {
        if let Some(s) = self.config.spectral {
            reset_recurrent(&mut self.estimator, params, s.lambda)?;
        }
        Ok(())
    }

    pub fn step<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        params: &mut ParamSet,
        objective: &O,
        rng: &mut R,
    ) -> Result<StepInfo> {
        let round = self.forward_phase(params, objective, rng)?;
        self.update_phase(params, &round)
    }

    pub(crate) fn forward_phase<O: Objective + ?Sized, R: Rng + ?Sized>(
        &self,
        params: &ParamSet,
        objective: &O,
        rng: &mut R,
    ) -> Result<PerturbationRound> {
        PerturbationRound::run(objective, params, self.config.sigma_sq, self.config.draws_per_step, rng)
    }

    pub(crate) fn update_phase(&mut self, params: &mut ParamSet, round: &PerturbationRound) -> Result<StepInfo> {
        let k = round.draws.len();
        for (draw, r) in &round.draws {
            let c = step_coefficient(self.config.eta, *r, self.config.sigma_sq, k);
            apply_update(params, draw, &vec![c; params.len()])?;
        }
        if let Some(s) = self.config.spectral {
            if s.due(self.step) {
                reset_recurrent(&mut self.estimator, params, s.lambda)?;
            }
        }
        self.step += 1;
        Ok(StepInfo { loss: round.base_loss, regret: round.mean_regret() })
    }
}
