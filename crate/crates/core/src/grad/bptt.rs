//! Backpropagation through time for the vanilla RNN.
//!
//! The forward pass records every hidden state of the window, so memory
//! grows linearly with the window length; this is the cost the perturbation
//! optimizers avoid.

use serde::{Deserialize, Serialize};

use super::{accumulate_col_sums, accumulate_outer, GradientSet};
use crate::error::{Error, Result};
use crate::matrix::{gemm, Operand, ParamSet};
use crate::nn::loss::sum_sq_diff;
use crate::nn::rnn::RnnView;
use crate::nn::{RnnSpec, SeqBatch, WindowReduction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BpttConfig {
    /// How per-step MSEs combine; must match the objective being compared.
    #[serde(default)]
    pub reduction: WindowReduction,
    /// Refuse to build a tape larger than this many bytes.
    #[serde(default)]
    pub memory_budget: Option<usize>,
}

/// Bytes held by the forward tape for `samples` sequences of `steps` steps.
pub fn bptt_tape_bytes(spec: &RnnSpec, samples: usize, steps: usize) -> usize {
    let per_step = samples * (spec.hidden_dim + spec.output_dim);
    (per_step * steps + samples * spec.hidden_dim) * std::mem::size_of::<f64>()
}

/// Everything the backward pass needs: all hidden states and readouts.
pub struct BpttTape<'a> {
    spec: &'a RnnSpec,
    batch: &'a SeqBatch,
    /// `hidden[t]` is `h_t`; `hidden[0]` is the zero initial state.
    hidden: Vec<Vec<f64>>,
    predictions: Vec<Vec<f64>>,
    weight: f64,
    pub loss: f64,
}

impl<'a> BpttTape<'a> {
    pub fn forward(spec: &'a RnnSpec, params: &ParamSet, batch: &'a SeqBatch, config: &BpttConfig) -> Result<Self> {
        let view = RnnView::new(spec, params)?;
        view.check_batch(batch)?;
        let (n, steps) = (batch.samples(), batch.steps());
        if let Some(budget) = config.memory_budget {
            let required = bptt_tape_bytes(spec, n, steps);
            if required > budget {
                return Err(Error::MemoryBudget { required, budget });
            }
        }
        let (h, o) = (spec.hidden_dim, spec.output_dim);
        let weight = match config.reduction {
            WindowReduction::Sum => 1.0,
            WindowReduction::Mean => 1.0 / steps as f64,
        };
        let mut hidden = Vec::with_capacity(steps + 1);
        hidden.push(vec![0.0; n * h]);
        let mut predictions = Vec::with_capacity(steps);
        let mut loss = 0.0;
        for t in 0..steps {
            let mut next = vec![0.0; n * h];
            view.cell(n, batch.input_at(t), &hidden[t], &mut next);
            let mut y = vec![0.0; n * o];
            view.readout(n, &next, &mut y);
            loss += weight * sum_sq_diff(&y, batch.target_at(t)) / (n * o) as f64;
            hidden.push(next);
            predictions.push(y);
        }
        Ok(Self { spec, batch, hidden, predictions, weight, loss })
    }

    /// Gradient of the window loss with respect to every parameter matrix.
    pub fn backward(&self, params: &ParamSet) -> Result<GradientSet> {
        let view = RnnView::new(self.spec, params)?;
        let spec = self.spec;
        let (n, i, h, o) = (self.batch.samples(), spec.input_dim, spec.hidden_dim, spec.output_dim);
        let (w_in, w_rec, b_h, w_out, b_out) = if spec.use_bias { (0, 1, Some(2), 3, Some(4)) } else { (0, 1, None, 2, None) };
        let mut grads = GradientSet::zeros_like(params);
        let scale = 2.0 * self.weight / (n * o) as f64;
        let mut dh_next = vec![0.0; n * h];
        let mut dy = vec![0.0; n * o];
        let mut dh = vec![0.0; n * h];
        for t in (0..self.batch.steps()).rev() {
            let h_t = &self.hidden[t + 1];
            let h_prev = &self.hidden[t];
            dy.iter_mut()
                .zip(self.predictions[t].iter().zip(self.batch.target_at(t)))
                .for_each(|(d, (y, target))| *d = scale * (y - target));
            accumulate_outer(grads[w_out].as_mut_slice(), &dy, h_t, n, o, h);
            if let Some(b) = b_out {
                accumulate_col_sums(grads[b].as_mut_slice(), &dy, o);
            }
            dh.copy_from_slice(&dh_next);
            gemm(Operand::new(&dy, n, o), Operand::new(view.w_out, o, h), 1.0, &mut dh);
            // Through the ReLU: dh becomes dz in place.
            dh.iter_mut().zip(h_t).for_each(|(d, &v)| {
                if v <= 0.0 {
                    *d = 0.0;
                }
            });
            accumulate_outer(grads[w_in].as_mut_slice(), &dh, self.batch.input_at(t), n, h, i);
            accumulate_outer(grads[w_rec].as_mut_slice(), &dh, h_prev, n, h, h);
            if let Some(b) = b_h {
                accumulate_col_sums(grads[b].as_mut_slice(), &dh, h);
            }
            gemm(Operand::new(&dh, n, h), Operand::new(view.w_rec, h, h), 0.0, &mut dh_next);
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("BPTT gradient".into()));
        }
        Ok(grads)
    }
}

/// Window loss and its exact gradient, unrolled over every step of `batch`.
pub fn bptt(spec: &RnnSpec, params: &ParamSet, batch: &SeqBatch, config: &BpttConfig) -> Result<(f64, GradientSet)> {
    let tape = BpttTape::forward(spec, params, batch, config)?;
    let grads = tape.backward(params)?;
    Ok((tape.loss, grads))
}
