//! First-order update rules.

use serde::{Deserialize, Serialize};

use super::GradientSet;
use crate::error::{Error, Result};
use crate::matrix::{ParamMatrix, ParamSet};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("learning rate must be positive, got {eta}")))
    }
}

/// `theta <- theta - eta * g` for every layer.
pub fn sgd_step(params: &mut ParamSet, grads: &GradientSet, eta: f64) -> Result<()> {
    check_eta(eta)?;
    grads.check_against(params)?;
    for (l, g) in grads.iter().enumerate() {
        params[l].as_mut_slice().iter_mut().zip(g.as_slice()).for_each(|(t, g)| *t -= eta * g);
    }
    Ok(())
}

/// Moment estimates of Adam, one pair of matrices per parameter matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<ParamMatrix>,
    v: Vec<ParamMatrix>,
}

impl AdamState {
    /// Zero moments with the usual defaults.
    pub fn new(params: &ParamSet, lr: f64) -> Result<Self> {
        check_eta(lr)?;
        let zeros = || params.iter().map(|p| ParamMatrix::zeros(p.value.rows(), p.value.cols())).collect();
        Ok(Self { lr, beta1: ADAM_BETA1, beta2: ADAM_BETA2, eps: ADAM_EPS, step: 0, m: zeros(), v: zeros() })
    }
}

/// One bias-corrected Adam step.
pub fn adam_step(state: &mut AdamState, params: &mut ParamSet, grads: &GradientSet) -> Result<()> {
    grads.check_against(params)?;
    if state.m.len() != params.len() {
        return Err(Error::Shape("Adam state was built for a different network".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
    for (l, g) in grads.iter().enumerate() {
        let m = state.m[l].as_mut_slice();
        let v = state.v[l].as_mut_slice();
        let theta = params[l].as_mut_slice();
        for j in 0..theta.len() {
            let gj = g.as_slice()[j];
            m[j] = b1 * m[j] + (1.0 - b1) * gj;
            v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
            theta[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
        }
    }
    Ok(())
}

/// A gradient-based optimizer with its state.
#[derive(Clone, Debug)]
pub enum GradientOptimizer {
    Sgd { eta: f64 },
    Adam(AdamState),
}

impl GradientOptimizer {
    pub fn step(&mut self, params: &mut ParamSet, grads: &GradientSet) -> Result<()> {
        match self {
            GradientOptimizer::Sgd { eta } => sgd_step(params, grads, *eta),
            GradientOptimizer::Adam(state) => adam_step(state, params, grads),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> ParamSet {
        ParamSet::single(ParamMatrix::from_vec(1, 1, vec![v]).unwrap())
    }

    fn grad(v: f64) -> GradientSet {
        GradientSet::from_matrices(vec![ParamMatrix::from_vec(1, 1, vec![v]).unwrap()])
    }

    #[test]
    fn sgd_examples() {
        let mut p = scalar(1.0);
        sgd_step(&mut p, &grad(0.0), 0.1).unwrap();
        assert_eq!(p[0].get(0, 0), 1.0);
        sgd_step(&mut p, &grad(2.0), 0.1).unwrap();
        assert!((p[0].get(0, 0) - 0.8).abs() < 1e-15);
        assert!(sgd_step(&mut p, &grad(2.0), 0.0).is_err());
    }

    #[test]
    fn sgd_descends_a_bowl_below_the_stability_limit() {
        // L = 0.5 * k * x^2, curvature k.
        let k = 4.0;
        let eta = 0.45; // < 2 / k
        let mut p = scalar(3.0);
        let mut prev = f64::INFINITY;
        for _ in 0..50 {
            let x = p[0].get(0, 0);
            let loss = 0.5 * k * x * x;
            assert!(loss < prev);
            prev = loss;
            sgd_step(&mut p, &grad(k * x), eta).unwrap();
        }
    }

    #[test]
    fn adam_first_step() {
        let mut p = scalar(0.0);
        let mut s = AdamState::new(&p, 1e-3).unwrap();
        adam_step(&mut s, &mut p, &grad(0.5)).unwrap();
        let expect = -1e-3 * 0.5 / (0.5 + 1e-8);
        assert!((p[0].get(0, 0) - expect).abs() < 1e-18);
        assert!((p[0].get(0, 0) + 0.000999999).abs() < 1e-9);
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut p = scalar(0.7);
        let mut s = AdamState::new(&p, 1e-3).unwrap();
        adam_step(&mut s, &mut p, &grad(0.0)).unwrap();
        assert_eq!(p[0].get(0, 0), 0.7);
    }

    #[test]
    fn adam_first_step_moves_against_the_sign() {
        let g = [0.3, -2.0, 1e-4, -7.5];
        let mut p = ParamSet::single(ParamMatrix::zeros(1, 4));
        let mut s = AdamState::new(&p, 0.01).unwrap();
        let gs = GradientSet::from_matrices(vec![ParamMatrix::from_vec(1, 4, g.to_vec()).unwrap()]);
        adam_step(&mut s, &mut p, &gs).unwrap();
        for (theta, g) in p[0].as_slice().iter().zip(g) {
            assert_eq!(theta.signum(), -g.signum());
        }
    }

    #[test]
    fn clip_norm_caps_the_global_norm() {
        let mut g = GradientSet::from_matrices(vec![
            ParamMatrix::from_vec(1, 2, vec![3.0, 0.0]).unwrap(),
            ParamMatrix::from_vec(1, 1, vec![4.0]).unwrap(),
        ]);
        g.clip_norm(1.0);
        assert!((g.norm() - 1.0).abs() < 1e-15);
        assert!((g[0].get(0, 0) - 0.6).abs() < 1e-15);
    }
}
