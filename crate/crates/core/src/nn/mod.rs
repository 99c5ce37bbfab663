//! Dense network math: parameter layouts, MLP and vanilla-RNN forward
//! passes, heads and losses. Everything that evaluates a loss goes through
//! this module.

pub mod activation;
pub mod loss;
pub mod mlp;
pub mod objective;
pub mod rnn;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ParamMatrix, ParamRole, ParamSet};

pub use activation::{relu, sigmoid, sigmoid_softmax_head, softmax, Head};
pub use loss::{bce_loss, mse_loss};
pub use mlp::mlp_forward;
pub use objective::{ClassificationLoss, Objective, RegressionLoss, SequenceLoss, WindowReduction};
pub use rnn::{rnn_forward, RnnOutput};

/// Feed-forward network with ReLU hidden layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Input, hidden..., output widths.
    pub layer_dims: Vec<usize>,
    /// One flag per weight layer; `false` gives a purely linear layer.
    pub use_bias: Vec<bool>,
    pub head: Head,
}

impl MlpSpec {
    pub fn new(layer_dims: Vec<usize>, bias: bool, head: Head) -> Result<Self> {
        let n = layer_dims.len().saturating_sub(1);
        let spec = Self { layer_dims, use_bias: vec![bias; n], head };
        spec.validate()?;
        Ok(spec)
    }

    /// The 2-4-2 XOR classifier, with ("affine") or without ("linear") biases.
    pub fn xor(bias: bool) -> Self {
        Self { layer_dims: vec![2, 4, 2], use_bias: vec![bias; 2], head: Head::SigmoidSoftmax }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 3 {
            return Err(Error::InvalidParameter(
                "an MLP needs an input, at least one hidden and an output layer".into(),
            ));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::InvalidParameter("zero-width layer".into()));
        }
        if self.use_bias.len() != self.layer_dims.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} bias flags for {} weight layers",
                self.use_bias.len(),
                self.layer_dims.len() - 1
            )));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    /// Parameter shapes in storage order: `w0, [b0], w1, [b1], ...`.
    pub fn param_layout(&self) -> Vec<(String, ParamRole, usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.layer_dims[k], self.layer_dims[k + 1]);
            out.push((format!("w{k}"), ParamRole::Weight, fan_out, fan_in));
            if self.use_bias[k] {
                out.push((format!("b{k}"), ParamRole::Bias, fan_out, 1));
            }
        }
        out
    }
}

/// Single-layer vanilla RNN with ReLU cell and affine readout at every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnnSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub use_bias: bool,
}

impl RnnSpec {
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        Self { input_dim, hidden_dim, output_dim, use_bias: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidParameter("RNN dimensions must be positive".into()));
        }
        Ok(())
    }

    /// Storage order: `w_in, w_rec, [b_h], w_out, [b_out]`.
    pub fn param_layout(&self) -> Vec<(String, ParamRole, usize, usize)> {
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        let mut out = vec![
            ("w_in".to_string(), ParamRole::Weight, h, i),
            ("w_rec".to_string(), ParamRole::Recurrent, h, h),
        ];
        if self.use_bias {
            out.push(("b_h".to_string(), ParamRole::Bias, h, 1));
        }
        out.push(("w_out".to_string(), ParamRole::Weight, o, h));
        if self.use_bias {
            out.push(("b_out".to_string(), ParamRole::Bias, o, 1));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Mlp(MlpSpec),
    Rnn(RnnSpec),
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        match self {
            Architecture::Mlp(s) => s.validate(),
            Architecture::Rnn(s) => s.validate(),
        }
    }

    fn param_layout(&self) -> Vec<(String, ParamRole, usize, usize)> {
        match self {
            Architecture::Mlp(s) => s.param_layout(),
            Architecture::Rnn(s) => s.param_layout(),
        }
    }
}

/// An architecture together with its current parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub arch: Architecture,
    pub params: ParamSet,
}

impl Network {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let mut params = ParamSet::new();
        for (name, role, r, c) in arch.param_layout() {
            params.push(name, role, ParamMatrix::zeros(r, c));
        }
        Ok(Self { arch, params })
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases,
    /// where `fan_in` is the width feeding the layer.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let fan_ins: Vec<usize> = match &net.arch {
            Architecture::Mlp(spec) => spec
                .param_layout()
                .iter()
                .map(|(name, _, _, _)| {
                    let k: usize = name[1..].parse().unwrap();
                    spec.layer_dims[k]
                })
                .collect(),
            Architecture::Rnn(spec) => spec
                .param_layout()
                .iter()
                .map(|(name, _, _, _)| match name.as_str() {
                    "w_in" => spec.input_dim,
                    _ => spec.hidden_dim,
                })
                .collect(),
        };
        for (i, fan_in) in fan_ins.into_iter().enumerate() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in net.params[i].as_mut_slice() {
                *v = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let shapes: Vec<(usize, usize)> =
            self.arch.param_layout().into_iter().map(|(_, _, r, c)| (r, c)).collect();
        if !self.params.same_shapes(&shapes) {
            return Err(Error::Shape(format!(
                "parameter shapes {:?} do not match the architecture {:?}",
                self.params.shapes(),
                shapes
            )));
        }
        let recurrent = self.params.iter().filter(|p| p.role == ParamRole::Recurrent).count();
        let expected = usize::from(matches!(self.arch, Architecture::Rnn(_)));
        if recurrent != expected {
            return Err(Error::Shape(format!("{recurrent} recurrent matrices, expected {expected}")));
        }
        Ok(())
    }
}

/// Targets of a tabular batch.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Labels(Vec<usize>),
    Values(ParamMatrix),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Labels(l) => l.len(),
            Targets::Values(v) => v.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `samples x features` inputs with per-sample targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: ParamMatrix,
    pub targets: Targets,
}

impl Batch {
    pub fn new(inputs: ParamMatrix, targets: Targets) -> Result<Self> {
        if inputs.rows() != targets.len() {
            return Err(Error::Shape(format!(
                "{} input rows, {} targets",
                inputs.rows(),
                targets.len()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Labels(l) => Some(l),
            Targets::Values(_) => None,
        }
    }

    /// Rows selected by `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let cols = self.inputs.cols();
        let inputs = ParamMatrix::from_fn(idx.len(), cols, |r, c| self.inputs.get(idx[r], c));
        let targets = match &self.targets {
            Targets::Labels(l) => Targets::Labels(idx.iter().map(|&i| l[i]).collect()),
            Targets::Values(v) => {
                Targets::Values(ParamMatrix::from_fn(idx.len(), v.cols(), |r, c| v.get(idx[r], c)))
            }
        };
        Self { inputs, targets }
    }
}

/// A batch of equal-length sequences stored time-major: the block for step
/// `t` holds `samples x features` values contiguously. Targets are per step
/// (`targets[t]` is what the readout should produce after consuming
/// `inputs[t]`), so the last step's target is the one-step-ahead forecast.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqBatch {
    samples: usize,
    steps: usize,
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl SeqBatch {
    pub fn new(
        samples: usize,
        steps: usize,
        input_dim: usize,
        output_dim: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if inputs.len() != samples * steps * input_dim {
            return Err(Error::Shape(format!(
                "{} input values for {samples} samples x {steps} steps x {input_dim} features",
                inputs.len()
            )));
        }
        if targets.len() != samples * steps * output_dim {
            return Err(Error::Shape(format!(
                "{} target values for {samples} samples x {steps} steps x {output_dim} outputs",
                targets.len()
            )));
        }
        Ok(Self { samples, steps, input_dim, output_dim, inputs, targets })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Look-back length `T`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn input_at(&self, t: usize) -> &[f64] {
        let w = self.samples * self.input_dim;
        &self.inputs[t * w..(t + 1) * w]
    }

    pub fn target_at(&self, t: usize) -> &[f64] {
        let w = self.samples * self.output_dim;
        &self.targets[t * w..(t + 1) * w]
    }

    /// Keep only the last `steps` time steps of every sequence.
    pub fn last_steps(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.steps {
            return Err(Error::InvalidParameter(format!(
                "cannot keep {steps} of {} steps",
                self.steps
            )));
        }
        let skip = self.steps - steps;
        let wi = self.samples * self.input_dim;
        let wo = self.samples * self.output_dim;
        Self::new(
            self.samples,
            steps,
            self.input_dim,
            self.output_dim,
            self.inputs[skip * wi..].to_vec(),
            self.targets[skip * wo..].to_vec(),
        )
    }
}
