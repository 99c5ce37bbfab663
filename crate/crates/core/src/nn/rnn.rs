//! Vanilla RNN forward pass:
//! `h_t = relu(W_in x_t + W_rec h_{t-1} + b_h)`, `y_t = W_out h_t + b_out`.

use super::activation::relu_in_place;
use super::loss::sum_sq_diff;
use super::{RnnSpec, SeqBatch};
use crate::error::{Error, Result};
use crate::matrix::{gemm, Operand, ParamMatrix, ParamSet};

/// Borrowed views of an RNN's parameter matrices.
pub(crate) struct RnnView<'a> {
    pub spec: &'a RnnSpec,
    pub w_in: &'a [f64],
    pub w_rec: &'a [f64],
    pub b_h: Option<&'a [f64]>,
    pub w_out: &'a [f64],
    pub b_out: Option<&'a [f64]>,
}

impl<'a> RnnView<'a> {
    pub fn new(spec: &'a RnnSpec, params: &'a ParamSet) -> Result<Self> {
        let shapes: Vec<(usize, usize)> =
            spec.param_layout().into_iter().map(|(_, _, r, c)| (r, c)).collect();
        if !params.same_shapes(&shapes) {
            return Err(Error::Shape(format!(
                "RNN expects parameter shapes {shapes:?}, got {:?}",
                params.shapes()
            )));
        }
        let (b_h, w_out, b_out) = if spec.use_bias {
            (Some(params[2].as_slice()), params[3].as_slice(), Some(params[4].as_slice()))
        } else {
            (None, params[2].as_slice(), None)
        };
        Ok(Self { spec, w_in: params[0].as_slice(), w_rec: params[1].as_slice(), b_h, w_out, b_out })
    }

    pub fn check_batch(&self, batch: &SeqBatch) -> Result<()> {
        if batch.input_dim() != self.spec.input_dim || batch.output_dim() != self.spec.output_dim {
            return Err(Error::Shape(format!(
                "sequence batch is {}->{}, network is {}->{}",
                batch.input_dim(),
                batch.output_dim(),
                self.spec.input_dim,
                self.spec.output_dim
            )));
        }
        if batch.steps() == 0 {
            return Err(Error::Shape("empty sequence window".into()));
        }
        Ok(())
    }

    /// Pre-activation of one step for `n` samples, written into `z`.
    pub fn pre_activation(&self, n: usize, x_t: &[f64], h_prev: &[f64], z: &mut [f64]) {
        let (i, h) = (self.spec.input_dim, self.spec.hidden_dim);
        let beta = match self.b_h {
            Some(b) => {
                for row in z.chunks_exact_mut(h) {
                    row.copy_from_slice(b);
                }
                1.0
            }
            None => 0.0,
        };
        gemm(Operand::new(x_t, n, i), Operand::transposed(self.w_in, h, i), beta, z);
        gemm(Operand::new(h_prev, n, h), Operand::transposed(self.w_rec, h, h), 1.0, z);
    }

    pub fn cell(&self, n: usize, x_t: &[f64], h_prev: &[f64], h_next: &mut [f64]) {
        self.pre_activation(n, x_t, h_prev, h_next);
        relu_in_place(h_next);
    }

    pub fn readout(&self, n: usize, h: &[f64], y: &mut [f64]) {
        let (hd, o) = (self.spec.hidden_dim, self.spec.output_dim);
        let beta = match self.b_out {
            Some(b) => {
                for row in y.chunks_exact_mut(o) {
                    row.copy_from_slice(b);
                }
                1.0
            }
            None => 0.0,
        };
        gemm(Operand::new(h, n, hd), Operand::transposed(self.w_out, o, hd), beta, y);
    }

    pub fn initial_state(&self, n: usize, h0: Option<&[f64]>) -> Result<Vec<f64>> {
        let h = self.spec.hidden_dim;
        match h0 {
            None => Ok(vec![0.0; n * h]),
            Some(v) if v.len() == h => Ok(v.repeat(n)),
            Some(v) => Err(Error::Shape(format!("h0 has {} entries, hidden_dim is {h}", v.len()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnnOutput {
    /// Time-major `steps x samples x output_dim`.
    pub predictions: Vec<f64>,
    /// `samples x hidden_dim`.
    pub final_hidden: ParamMatrix,
}

impl RnnOutput {
    pub fn prediction_at(&self, t: usize, samples: usize, output_dim: usize) -> &[f64] {
        let w = samples * output_dim;
        &self.predictions[t * w..(t + 1) * w]
    }
}

/// Run the recurrence over every step of `batch`, reading out at each step.
/// `h0` (length `hidden_dim`) is shared by every sample; `None` means zeros.
pub fn rnn_forward(
    spec: &RnnSpec,
    params: &ParamSet,
    batch: &SeqBatch,
    h0: Option<&[f64]>,
) -> Result<RnnOutput> {
    let view = RnnView::new(spec, params)?;
    view.check_batch(batch)?;
    let n = batch.samples();
    let (h, o) = (spec.hidden_dim, spec.output_dim);
    let mut h_prev = view.initial_state(n, h0)?;
    let mut h_next = vec![0.0; n * h];
    let mut predictions = vec![0.0; batch.steps() * n * o];
    for t in 0..batch.steps() {
        view.cell(n, batch.input_at(t), &h_prev, &mut h_next);
        view.readout(n, &h_next, &mut predictions[t * n * o..(t + 1) * n * o]);
        std::mem::swap(&mut h_prev, &mut h_next);
    }
    Ok(RnnOutput { predictions, final_hidden: ParamMatrix::from_vec(n, h, h_prev)? })
}

/// Per-step mean squared error, holding only two hidden-state buffers.
pub(crate) fn step_losses(spec: &RnnSpec, params: &ParamSet, batch: &SeqBatch) -> Result<Vec<f64>> {
    let view = RnnView::new(spec, params)?;
    view.check_batch(batch)?;
    let n = batch.samples();
    let (h, o) = (spec.hidden_dim, spec.output_dim);
    let mut h_prev = vec![0.0; n * h];
    let mut h_next = vec![0.0; n * h];
    let mut y = vec![0.0; n * o];
    let mut losses = Vec::with_capacity(batch.steps());
    for t in 0..batch.steps() {
        view.cell(n, batch.input_at(t), &h_prev, &mut h_next);
        view.readout(n, &h_next, &mut y);
        losses.push(sum_sq_diff(&y, batch.target_at(t)) / (n * o) as f64);
        std::mem::swap(&mut h_prev, &mut h_next);
    }
    Ok(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ParamRole;
    use crate::nn::{mlp::mlp_forward, Architecture, Head, MlpSpec, Network};
    use crate::rng::{stream_rng, Stream};
    use rand::Rng;

    fn random_batch(seed: u64, n: usize, steps: usize, i: usize, o: usize) -> SeqBatch {
        let mut rng = stream_rng(seed, Stream::Data);
        let inputs = (0..n * steps * i).map(|_| rng.random_range(-1.0..1.0)).collect();
        let targets = (0..n * steps * o).map(|_| rng.random_range(-1.0..1.0)).collect();
        SeqBatch::new(n, steps, i, o, inputs, targets).unwrap()
    }

    #[test]
    fn zero_parameters_give_zero_everything() {
        let spec = RnnSpec::new(2, 5, 3);
        let net = Network::zeros(Architecture::Rnn(spec.clone())).unwrap();
        let batch = random_batch(1, 4, 6, 2, 3);
        let out = rnn_forward(&spec, &net.params, &batch, None).unwrap();
        assert!(out.predictions.iter().all(|&v| v == 0.0));
        assert!(out.final_hidden.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_recurrence_is_a_per_step_feed_forward_map() {
        let spec = RnnSpec::new(2, 6, 2);
        let mut rng = stream_rng(5, Stream::Init);
        let mut net = Network::init(Architecture::Rnn(spec.clone()), &mut rng).unwrap();
        net.params[1].scale(0.0);
        let batch = random_batch(2, 3, 4, 2, 2);
        let out = rnn_forward(&spec, &net.params, &batch, None).unwrap();

        let mlp = MlpSpec::new(vec![2, 6, 2], true, Head::Identity).unwrap();
        let mut mlp_params = ParamSet::new();
        mlp_params.push("w0", ParamRole::Weight, net.params[0].clone());
        mlp_params.push("b0", ParamRole::Bias, net.params[2].clone());
        mlp_params.push("w1", ParamRole::Weight, net.params[3].clone());
        mlp_params.push("b1", ParamRole::Bias, net.params[4].clone());
        for t in 0..4 {
            let x = ParamMatrix::from_vec(3, 2, batch.input_at(t).to_vec()).unwrap();
            let y = mlp_forward(&mlp, &mlp_params, &x).unwrap();
            let pred = out.prediction_at(t, 3, 2);
            for (a, b) in pred.iter().zip(y.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_unit_cell_matches_hand_unrolling() {
        // Single input, two hidden units, single output, no biases.
        let spec = RnnSpec { input_dim: 1, hidden_dim: 2, output_dim: 1, use_bias: false };
        let mut params = ParamSet::new();
        params.push("w_in", ParamRole::Weight, ParamMatrix::column(&[1.0, -0.5]));
        params.push(
            "w_rec",
            ParamRole::Recurrent,
            ParamMatrix::from_rows(&[&[0.5, 0.25], &[-0.3, 0.8]]).unwrap(),
        );
        params.push("w_out", ParamRole::Weight, ParamMatrix::from_rows(&[&[2.0, -1.0]]).unwrap());
        let xs = [1.0, -2.0, 0.5];
        let batch = SeqBatch::new(1, 3, 1, 1, xs.to_vec(), vec![0.0; 3]).unwrap();
        let out = rnn_forward(&spec, &params, &batch, None).unwrap();

        // t=0: z = (1, -0.5) -> h = (1, 0); y = 2
        // t=1: z = (-2 + 0.5, 1 + -0.3) = (-1.5, 0.7) -> h = (0, 0.7); y = -0.7
        // t=2: z = (0.5 + 0.175, -0.25 + 0.56) = (0.675, 0.31) -> y = 1.35 - 0.31 = 1.04
        let expect = [2.0, -0.7, 1.04];
        for (a, b) in out.predictions.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((out.final_hidden.get(0, 0) - 0.675).abs() < 1e-12);
        assert!((out.final_hidden.get(0, 1) - 0.31).abs() < 1e-12);
    }

    #[test]
    fn h0_is_broadcast_and_checked() {
        let spec = RnnSpec { input_dim: 1, hidden_dim: 2, output_dim: 1, use_bias: false };
        let mut params = ParamSet::new();
        params.push("w_in", ParamRole::Weight, ParamMatrix::zeros(2, 1));
        params.push("w_rec", ParamRole::Recurrent, ParamMatrix::identity(2));
        params.push("w_out", ParamRole::Weight, ParamMatrix::from_rows(&[&[1.0, 1.0]]).unwrap());
        let batch = SeqBatch::new(2, 2, 1, 1, vec![0.0; 4], vec![0.0; 4]).unwrap();
        let out = rnn_forward(&spec, &params, &batch, Some(&[0.5, 0.25])).unwrap();
        assert!(out.predictions.iter().all(|&v| (v - 0.75).abs() < 1e-15));
        assert!(rnn_forward(&spec, &params, &batch, Some(&[1.0])).is_err());
    }

    #[test]
    fn step_losses_match_forward_predictions() {
        let spec = RnnSpec::new(3, 7, 3);
        let mut rng = stream_rng(9, Stream::Init);
        let net = Network::init(Architecture::Rnn(spec.clone()), &mut rng).unwrap();
        let batch = random_batch(4, 5, 6, 3, 3);
        let out = rnn_forward(&spec, &net.params, &batch, None).unwrap();
        let losses = step_losses(&spec, &net.params, &batch).unwrap();
        assert_eq!(losses.len(), 6);
        for (t, l) in losses.iter().enumerate() {
            let expect = crate::nn::mse_loss(out.prediction_at(t, 5, 3), batch.target_at(t)).unwrap();
            assert!((l - expect).abs() < 1e-14);
        }
    }
}
