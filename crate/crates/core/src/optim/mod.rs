//! Gradient-free optimizers: weight perturbation, its spectral variant, and
//! the two Dopamine learning-rate schedules.

mod dopamine;
mod perturbation;
mod regret;
mod reset;
mod wp;

pub use dopamine::{
    dopamine1_eta, dopamine2_eta, dopamine_s_update, Dopamine, DopamineConfig, DopamineState, DopamineVariant,
};
pub use perturbation::{sample_perturbation, PerturbationDraw};
pub use regret::{evaluate_regret, regret, truncated_regret, RegretEval, RegretScore};
pub use reset::{spectral_reset, spectral_reset_with, SpectralSchedule, MIN_RESCALABLE_RADIUS};
pub use wp::{wp_update, WeightPerturbation, WpConfig};

use rand::Rng;

use crate::error::Result;
use crate::matrix::ParamSet;
use crate::nn::Objective;
use wp::PerturbationRound;

/// What one optimizer step observed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    /// Loss at the parameters before the step.
    pub loss: f64,
    /// Regret driving the step (mean over draws).
    pub regret: f64,
}

/// Any of the perturbation-based optimizers behind one interface.
#[derive(Clone, Debug)]
pub enum PerturbationOptimizer {
    Wp(WeightPerturbation),
    Dopamine(Dopamine),
}

impl PerturbationOptimizer {
    pub fn prepare(&mut self, params: &mut ParamSet) -> Result<()> {
        match self {
            PerturbationOptimizer::Wp(o) => o.prepare(params),
            PerturbationOptimizer::Dopamine(o) => o.prepare(params),
        }
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
        match self {
            PerturbationOptimizer::Wp(o) => o.forward_phase(params, objective, rng),
            PerturbationOptimizer::Dopamine(o) => o.forward_phase(params, objective, rng),
        }
    }

    pub(crate) fn update_phase(
        &mut self,
        params: &mut ParamSet,
        round: &PerturbationRound,
    ) -> Result<StepInfo> {
        match self {
            PerturbationOptimizer::Wp(o) => o.update_phase(params, round),
            PerturbationOptimizer::Dopamine(o) => o.update_phase(params, round),
        }
    }

    /// Current per-layer learning rates.
    pub fn learning_rates(&self, layers: usize) -> Vec<f64> {
        match self {
            PerturbationOptimizer::Wp(o) => vec![o.config.eta; layers],
            PerturbationOptimizer::Dopamine(o) => o.state.eta.clone(),
        }
    }
}
