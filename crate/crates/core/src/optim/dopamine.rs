//! Weight perturbation with a reward-prediction-error driven learning rate.
//!
//! Each step draws one perturbation for every layer, measures the global
//! regret `R_t`, low-pass filters it into the auxiliary variable
//!
//! ```text
//! s_t = beta_s * s_{t-1} - (1 - beta_s) * R_t
//! ```
//!
//! and moves every layer's learning rate with it, either tracking it
//! (Dopamine-1) or decaying towards it (Dopamine-2):
//!
//! ```text
//! eta_t = (1 - beta_eta) * eta_{t-1} - beta_eta * s_t     // Dopamine-1
//! eta_t = (1 - beta_eta) * eta_{t-1} + beta_eta * s_t     // Dopamine-2
//! ```
//!
//! before applying `theta^l <- theta^l - eta_t^l * R_t * xi^l / sigma^2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::perturbation::check_sigma_sq;
use super::reset::reset_recurrent;
use super::wp::{apply_update, step_coefficient, PerturbationRound};
use super::{SpectralSchedule, StepInfo};
use crate::error::{Error, Result};
use crate::matrix::ParamSet;
use crate::nn::Objective;
use crate::spectral::SpectralEstimator;

pub fn dopamine_s_update(s_prev: f64, regret: f64, beta_s: f64) -> f64 {
    beta_s * s_prev - (1.0 - beta_s) * regret
}

/// Dopamine-1: the learning rate follows the filtered regret.
pub fn dopamine1_eta(eta_prev: f64, s: f64, beta_eta: f64) -> f64 {
    (1.0 - beta_eta) * eta_prev - beta_eta * s
}

/// Dopamine-2: the learning rate decays exponentially towards `s`.
pub fn dopamine2_eta(eta_prev: f64, s: f64, beta_eta: f64) -> f64 {
    (1.0 - beta_eta) * eta_prev + beta_eta * s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DopamineVariant {
    #[serde(rename = "dopamine1")]
    One,
    #[serde(rename = "dopamine2")]
    Two,
}

impl DopamineVariant {
    pub fn next_eta(self, eta_prev: f64, s: f64, beta_eta: f64) -> f64 {
        match self {
            DopamineVariant::One => dopamine1_eta(eta_prev, s, beta_eta),
            DopamineVariant::Two => dopamine2_eta(eta_prev, s, beta_eta),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DopamineConfig {
    pub variant: DopamineVariant,
    pub eta0: f64,
    pub s0: f64,
    pub beta_s: f64,
    pub beta_eta: f64,
    pub sigma_sq: f64,
    pub spectral: Option<SpectralSchedule>,
    /// Clamp learning rates from below. Off by default: the recurrences may
    /// legitimately drive `eta` negative.
    #[serde(default)]
    pub eta_floor: Option<f64>,
    /// Advance `s` once per layer inside the layer loop instead of once per step.
    #[serde(default)]
    pub s_per_layer: bool,
    #[serde(default = "one")]
    pub draws_per_step: usize,
}

fn one() -> usize {
    1
}

impl DopamineConfig {
    pub fn new(variant: DopamineVariant, eta0: f64, s0: f64, beta_s: f64, beta_eta: f64, sigma_sq: f64) -> Self {
        Self {
            variant,
            eta0,
            s0,
            beta_s,
            beta_eta,
            sigma_sq,
            spectral: None,
            eta_floor: None,
            s_per_layer: false,
            draws_per_step: 1,
        }
    }

    pub fn with_spectral(mut self, lambda: f64) -> Self {
        self.spectral = Some(SpectralSchedule::every_step(lambda));
        self
    }

    /// `0 < beta_s < 1` and `0 <= beta_eta < 1`; `beta_eta = 0` freezes the
    /// learning rate and reduces the rule to plain WP.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_s > 0.0 && self.beta_s < 1.0) {
            return Err(Error::InvalidParameter(format!("beta_s must be in (0, 1), got {}", self.beta_s)));
        }
        if !(self.beta_eta >= 0.0 && self.beta_eta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta_eta must be in [0, 1), got {}", self.beta_eta)));
        }
        if !self.eta0.is_finite() || !self.s0.is_finite() {
            return Err(Error::InvalidParameter("eta0 and s0 must be finite".into()));
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

    /// The `beta_eta < beta_s` guideline. Informational only; some published
    /// settings do not satisfy it.
    pub fn follows_beta_heuristic(&self) -> bool {
        self.beta_eta < self.beta_s
    }
}

/// Optimizer state: the filtered regret and one learning rate per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DopamineState {
    pub s: f64,
    pub eta: Vec<f64>,
    pub step: u64,
}

#[derive(Clone, Debug)]
pub struct Dopamine {
    pub config: DopamineConfig,
    pub state: DopamineState,
    estimator: SpectralEstimator,
}

impl Dopamine {
    pub fn new(config: DopamineConfig, params: &ParamSet) -> Result<Self> {
        config.validate()?;
        let state = DopamineState { s: config.s0, eta: vec![config.eta0; params.len()], step: 0 };
        Ok(Self { config, state, estimator: SpectralEstimator::new() })
    }

    /// Set the recurrent matrix to the target radius before training starts.
    pub fn prepare(&mut self, params: &mut ParamSet) -> Result<()> {
        if let Some(s) = self.config.spectral {
            reset_recurrent(&mut self.estimator, params, s.lambda)?;
        }
        Ok(())
    }

    /// Advance `s` and every layer's learning rate for regret `r`.
    pub fn advance_rates(&mut self, r: f64) {
        let cfg = &self.config;
        let state = &mut self.state;
        if !cfg.s_per_layer {
            state.s = dopamine_s_update(state.s, r, cfg.beta_s);
        }
        for eta in state.eta.iter_mut() {
            if cfg.s_per_layer {
                state.s = dopamine_s_update(state.s, r, cfg.beta_s);
            }
            *eta = cfg.variant.next_eta(*eta, state.s, cfg.beta_eta);
            if let Some(floor) = cfg.eta_floor {
                *eta = eta.max(floor);
            }
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

    /// Sample the perturbations and evaluate their regrets.
    pub(crate) fn forward_phase<O: Objective + ?Sized, R: Rng + ?Sized>(
        &self,
        params: &ParamSet,
        objective: &O,
        rng: &mut R,
    ) -> Result<PerturbationRound> {
        if self.state.eta.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} layers, parameters have {}",
                self.state.eta.len(),
                params.len()
            )));
        }
        PerturbationRound::run(objective, params, self.config.sigma_sq, self.config.draws_per_step, rng)
    }

    /// Everything after the loss evaluations. Touches only parameter-sized
    /// state, so its cost does not depend on the data or the window length.
    pub(crate) fn update_phase(&mut self, params: &mut ParamSet, round: &PerturbationRound) -> Result<StepInfo> {
        let k = round.draws.len();
        let sigma_sq = self.config.sigma_sq;
        let r = round.mean_regret();
        self.advance_rates(r);
        for (draw, ri) in &round.draws {
            let coeffs: Vec<f64> =
                self.state.eta.iter().map(|&eta| step_coefficient(eta, *ri, sigma_sq, k)).collect();
            apply_update(params, draw, &coeffs)?;
        }
        if let Some(s) = self.config.spectral {
            if s.due(self.state.step) {
                reset_recurrent(&mut self.estimator, params, s.lambda)?;
            }
        }
        self.state.step += 1;
        Ok(StepInfo { loss: round.base_loss, regret: r })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ParamMatrix;
    use crate::optim::{sample_perturbation, WeightPerturbation, WpConfig};
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn s_update_examples() {
        assert!((dopamine_s_update(0.01, 0.0, 0.5) - 0.005).abs() < 1e-12);
        assert!((dopamine_s_update(0.01, 0.5, 0.5) - (-0.245)).abs() < 1e-12);
        assert_eq!(dopamine_s_update(0.01, 123.0, 1.0), 0.01);
    }

    #[test]
    fn eta_update_examples() {
        assert_eq!(dopamine1_eta(0.01, -0.04, 0.0), 0.01);
        assert_eq!(dopamine2_eta(0.01, -0.04, 0.0), 0.01);
        assert!((dopamine1_eta(0.01, -0.04, 0.1) - 0.013).abs() < 1e-12);
        assert!((dopamine2_eta(0.01, -0.04, 0.1) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn fixed_points_under_constant_s() {
        let s = 0.037;
        let (mut e1, mut e2) = (0.5, 0.5);
        for _ in 0..2000 {
            e1 = dopamine1_eta(e1, s, 0.05);
            e2 = dopamine2_eta(e2, s, 0.05);
        }
        assert!((e1 + s).abs() < 1e-12);
        assert!((e2 - s).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let ok = DopamineConfig::new(DopamineVariant::One, 1e-2, 1e-2, 0.001, 1e-4, 0.1);
        ok.validate().unwrap();
        assert!(ok.follows_beta_heuristic());
        let mut bad = ok.clone();
        bad.beta_s = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.sigma_sq = 0.0;
        assert!(bad.validate().is_err());
        let mut zero = ok;
        zero.beta_eta = 0.0;
        zero.validate().unwrap();
    }

    #[test]
    fn zero_regret_step_still_advances_rates() {
        let mut p = ParamSet::single(ParamMatrix::from_vec(1, 2, vec![0.3, -0.2]).unwrap());
        let flat = |_: &ParamSet| 1.5;
        let cfg = DopamineConfig::new(DopamineVariant::Two, 0.1, 0.02, 0.5, 0.25, 0.01);
        let mut opt = Dopamine::new(cfg, &p).unwrap();
        let before = p.clone();
        let info = opt.step(&mut p, &flat, &mut stream_rng(0, Stream::Perturbation)).unwrap();
        assert_eq!(info.regret, 0.0);
        assert_eq!(p, before);
        assert!((opt.state.s - 0.01).abs() < 1e-15);
        assert!((opt.state.eta[0] - (0.75 * 0.1 + 0.25 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn one_step_matches_hand_composition() {
        let theta0 = 0.7;
        let mut p = ParamSet::single(ParamMatrix::from_vec(1, 1, vec![theta0]).unwrap());
        let quad = |q: &ParamSet| q[0].get(0, 0).powi(2);
        let cfg = DopamineConfig::new(DopamineVariant::One, 0.05, 0.01, 0.9, 0.2, 0.01);
        let mut opt = Dopamine::new(cfg, &p).unwrap();
        opt.step(&mut p, &quad, &mut stream_rng(42, Stream::Perturbation)).unwrap();

        let xi = sample_perturbation(&ParamSet::single(ParamMatrix::zeros(1, 1)), 0.01, &mut stream_rng(42, Stream::Perturbation))
            .unwrap()
            .noise[0]
            .get(0, 0);
        let r = (theta0 + xi).powi(2) - theta0 * theta0;
        let s = 0.9 * 0.01 - 0.1 * r;
        let eta = 0.8 * 0.05 - 0.2 * s;
        let expect = theta0 - eta * r * xi / 0.01;
        assert!((p[0].get(0, 0) - expect).abs() < 1e-12);
        assert!((opt.state.s - s).abs() < 1e-15);
        assert!((opt.state.eta[0] - eta).abs() < 1e-15);
    }

    #[test]
    fn frozen_learning_rate_reproduces_wp_bit_for_bit() {
        let start = ParamSet::single(ParamMatrix::from_fn(3, 3, |r, c| (r as f64 - c as f64) * 0.3));
        let obj = |q: &ParamSet| q[0].as_slice().iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum::<f64>();
        for variant in [DopamineVariant::One, DopamineVariant::Two] {
            let mut a = start.clone();
            let mut b = start.clone();
            let mut wp = WeightPerturbation::new(WpConfig::new(0.01, 1e-3)).unwrap();
            let mut dop = Dopamine::new(DopamineConfig::new(variant, 0.01, 0.3, 0.9, 0.0, 1e-3), &b).unwrap();
            let mut ra = stream_rng(5, Stream::Perturbation);
            let mut rb = stream_rng(5, Stream::Perturbation);
            for _ in 0..100 {
                wp.step(&mut a, &obj, &mut ra).unwrap();
                dop.step(&mut b, &obj, &mut rb).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn per_layer_s_advances_once_per_layer() {
        let mut p = ParamSet::single(ParamMatrix::zeros(1, 1));
        p.push("second", crate::matrix::ParamRole::Weight, ParamMatrix::zeros(1, 1));
        let mut cfg = DopamineConfig::new(DopamineVariant::Two, 0.1, 0.2, 0.5, 0.5, 0.01);
        cfg.s_per_layer = true;
        let mut opt = Dopamine::new(cfg, &p).unwrap();
        opt.advance_rates(0.0);
        assert!((opt.state.s - 0.05).abs() < 1e-15);
        assert!((opt.state.eta[0] - (0.05 + 0.05)).abs() < 1e-15);
        assert!((opt.state.eta[1] - (0.05 + 0.025)).abs() < 1e-15);
    }

    #[test]
    fn eta_floor_clamps() {
        let p = ParamSet::single(ParamMatrix::zeros(1, 1));
        let mut cfg = DopamineConfig::new(DopamineVariant::Two, 0.001, 0.0, 0.5, 0.9, 0.01);
        cfg.eta_floor = Some(0.0);
        let mut opt = Dopamine::new(cfg, &p).unwrap();
        opt.advance_rates(10.0);
        assert_eq!(opt.state.eta[0], 0.0);
    }
}
