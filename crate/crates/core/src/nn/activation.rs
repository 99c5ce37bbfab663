//! Elementwise nonlinearities and the classification heads.

use serde::{Deserialize, Serialize};

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

#[inline]
pub(crate) fn relu_in_place(x: &mut [f64]) {
    for v in x {
        // NaN passes through so later finiteness checks still see it.
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax with max-subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Output head of an MLP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// Elementwise sigmoid, then softmax over the outputs.
    SigmoidSoftmax,
    /// Plain softmax over the logits.
    Softmax,
    /// Raw outputs, for regression.
    Identity,
}

impl Head {
    pub fn is_probabilistic(self) -> bool {
        !matches!(self, Head::Identity)
    }

    /// Apply the head to one sample's logits in place.
    pub(crate) fn apply(self, logits: &mut [f64]) {
        match self {
            Head::SigmoidSoftmax => {
                logits.iter_mut().for_each(|v| *v = sigmoid(*v));
                softmax_in_place(logits);
            }
            Head::Softmax => softmax_in_place(logits),
            Head::Identity => {}
        }
    }
}

/// Sigmoid elementwise followed by softmax: the XOR network's output head.
pub fn sigmoid_softmax_head(logits: &[f64]) -> Vec<f64> {
    let mut out = logits.to_vec();
    Head::SigmoidSoftmax.apply(&mut out);
    out
}
