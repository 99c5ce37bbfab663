//! Scalar objectives over a parameter set: what the optimizers minimize.

use serde::{Deserialize, Serialize};

use super::{bce_loss, mlp_forward, mse_loss, rnn, Batch, MlpSpec, RnnSpec, SeqBatch, Targets};
use crate::error::{Error, Result};
use crate::matrix::ParamSet;

pub trait Objective {
    fn loss(&self, params: &ParamSet) -> Result<f64>;
}

/// Closures make toy objectives (quadratics and friends).
impl<F> Objective for F
where
    F: Fn(&ParamSet) -> f64,
{
    fn loss(&self, params: &ParamSet) -> Result<f64> {
        Ok(self(params))
    }
}

/// MLP + BCE on class labels.
pub struct ClassificationLoss<'a> {
    pub spec: &'a MlpSpec,
    pub batch: &'a Batch,
}

impl Objective for ClassificationLoss<'_> {
    fn loss(&self, params: &ParamSet) -> Result<f64> {
        let labels = self
            .batch
            .labels()
            .ok_or_else(|| Error::Shape("classification needs label targets".into()))?;
        let probs = mlp_forward(self.spec, params, &self.batch.inputs)?;
        bce_loss(&probs, labels)
    }
}

/// MLP + MSE on real-valued targets.
pub struct RegressionLoss<'a> {
    pub spec: &'a MlpSpec,
    pub batch: &'a Batch,
}

impl Objective for RegressionLoss<'_> {
    fn loss(&self, params: &ParamSet) -> Result<f64> {
        let Targets::Values(targets) = &self.batch.targets else {
            return Err(Error::Shape("regression needs value targets".into()));
        };
        let preds = mlp_forward(self.spec, params, &self.batch.inputs)?;
        mse_loss(preds.as_slice(), targets.as_slice())
    }
}

/// How per-step losses over a look-back window combine into one scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowReduction {
    /// Sum over the window (the truncated regret sums per-step differences).
    #[default]
    Sum,
    /// Average over the window.
    Mean,
}

/// RNN with per-step readout, scored by per-step MSE.
pub struct SequenceLoss<'a> {
    pub spec: &'a RnnSpec,
    pub batch: &'a SeqBatch,
    pub reduction: WindowReduction,
}

impl<'a> SequenceLoss<'a> {
    pub fn new(spec: &'a RnnSpec, batch: &'a SeqBatch) -> Self {
        Self { spec, batch, reduction: WindowReduction::Sum }
    }

    pub fn with_reduction(mut self, reduction: WindowReduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn step_losses(&self, params: &ParamSet) -> Result<Vec<f64>> {
        rnn::step_losses(self.spec, params, self.batch)
    }

    /// Mean per-step MSE, whatever the reduction. This is the number reported
    /// in loss curves for forecasting tasks.
    pub fn mean_loss(&self, params: &ParamSet) -> Result<f64> {
        let steps = self.step_losses(params)?;
        Ok(steps.iter().sum::<f64>() / steps.len() as f64)
    }

    pub fn reduce(&self, steps: &[f64]) -> f64 {
        let total: f64 = steps.iter().sum();
        match self.reduction {
            WindowReduction::Sum => total,
            WindowReduction::Mean => total / steps.len() as f64,
        }
    }
}

impl Objective for SequenceLoss<'_> {
    fn loss(&self, params: &ParamSet) -> Result<f64> {
        let steps = self.step_losses(params)?;
        Ok(self.reduce(&steps))
    }
}
