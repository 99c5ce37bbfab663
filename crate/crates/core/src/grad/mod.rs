//! Gradient baselines: hand-written backprop for the MLP, backpropagation
//! through time for the RNN, and the SGD and Adam update rules.

mod bptt;
mod mlp;
mod update;

pub use bptt::{bptt, bptt_tape_bytes, BpttConfig, BpttTape};
pub use mlp::mlp_backprop;
pub use update::{adam_step, sgd_step, AdamState, GradientOptimizer, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{ParamMatrix, ParamSet};

/// `dL/dtheta`, one matrix per parameter matrix, in the same order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientSet {
    grads: Vec<ParamMatrix>,
}

impl GradientSet {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self { grads: params.iter().map(|p| ParamMatrix::zeros(p.value.rows(), p.value.cols())).collect() }
    }

    pub fn from_matrices(grads: Vec<ParamMatrix>) -> Self {
        Self { grads }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ParamMatrix> {
        self.grads.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(ParamMatrix::is_finite)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.grads.iter().flat_map(|g| g.as_slice().iter().copied()).collect()
    }

    /// Euclidean norm over every entry.
    pub fn norm(&self) -> f64 {
        self.grads.iter().flat_map(|g| g.as_slice()).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Rescale so the global norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let norm = self.norm();
        if norm > max_norm && norm > 0.0 {
            let f = max_norm / norm;
            self.grads.iter_mut().for_each(|g| g.scale(f));
        }
    }

    pub(crate) fn check_against(&self, params: &ParamSet) -> Result<()> {
        let shapes: Vec<(usize, usize)> = self.grads.iter().map(ParamMatrix::shape).collect();
        if !params.same_shapes(&shapes) {
            return Err(Error::Shape(format!(
                "gradient shapes {shapes:?} do not match parameters {:?}",
                params.shapes()
            )));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for GradientSet {
    type Output = ParamMatrix;

    fn index(&self, i: usize) -> &ParamMatrix {
        &self.grads[i]
    }
}

impl std::ops::IndexMut<usize> for GradientSet {
    fn index_mut(&mut self, i: usize) -> &mut ParamMatrix {
        &mut self.grads[i]
    }
}

/// `g += a^T * b` for row-major `a: n x p`, `b: n x q`, `g: p x q`.
pub(crate) fn accumulate_outer(g: &mut [f64], a: &[f64], b: &[f64], n: usize, p: usize, q: usize) {
    crate::matrix::gemm(
        crate::matrix::Operand::transposed(a, n, p),
        crate::matrix::Operand::new(b, n, q),
        1.0,
        g,
    );
}

/// `g += column sums of a (n x p)`.
pub(crate) fn accumulate_col_sums(g: &mut [f64], a: &[f64], p: usize) {
    for row in a.chunks_exact(p) {
        g.iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
}
