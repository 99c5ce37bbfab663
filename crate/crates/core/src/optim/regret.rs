use serde::{Deserialize, Serialize};

use super::PerturbationDraw;
use crate::error::{Error, Result};
use crate::matrix::ParamSet;
use crate::nn::{Objective, SequenceLoss};

/// `L(theta + xi) - L(theta)`: the loss of the perturbed model minus the loss
/// of the unperturbed one.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RegretScore(pub f64);

impl RegretScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Both losses behind a regret value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretEval {
    pub base_loss: f64,
    pub perturbed_loss: f64,
    pub regret: RegretScore,
}

/// Two forward passes: one at `params`, one at `params + xi`.
pub fn evaluate_regret<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamSet,
    draw: &PerturbationDraw,
) -> Result<RegretEval> {
    let base_loss = objective.loss(params)?;
    let perturbed_loss = perturbed_loss(objective, params, draw)?;
    finish(base_loss, perturbed_loss)
}

pub(crate) fn perturbed_loss<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamSet,
    draw: &PerturbationDraw,
) -> Result<f64> {
    let shifted = draw.perturbed(params)?;
    objective.loss(&shifted)
}

pub(crate) fn finish(base_loss: f64, perturbed_loss: f64) -> Result<RegretEval> {
    if !base_loss.is_finite() || !perturbed_loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss {base_loss} / perturbed loss {perturbed_loss}"
        )));
    }
    Ok(RegretEval { base_loss, perturbed_loss, regret: RegretScore(perturbed_loss - base_loss) })
}

/// Single-draw regret estimate. `params` is never modified.
pub fn regret<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamSet,
    draw: &PerturbationDraw,
) -> Result<RegretScore> {
    Ok(evaluate_regret(objective, params, draw)?.regret)
}

/// Regret of a recurrent model summed over the look-back window:
/// `sum_tau (L_tau(theta + xi) - L_tau(theta))`.
pub fn truncated_regret(
    objective: &SequenceLoss<'_>,
    params: &ParamSet,
    draw: &PerturbationDraw,
) -> Result<RegretScore> {
    let base = objective.step_losses(params)?;
    let shifted = objective.step_losses(&draw.perturbed(params)?)?;
    if base.is_empty() {
        return Err(Error::InvalidParameter("empty window".into()));
    }
    let total: f64 = shifted.iter().zip(&base).map(|(p, b)| p - b).sum();
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("truncated regret {total}")));
    }
    Ok(RegretScore(total))
}
