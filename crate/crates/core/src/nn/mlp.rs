//! MLP forward pass.

use super::activation::relu_in_place;
use super::MlpSpec;
use crate::error::{Error, Result};
use crate::matrix::{gemm, Operand, ParamMatrix, ParamSet};

/// Intermediate values kept for backpropagation.
pub(crate) struct MlpTape {
    /// `activations[0]` is the input; `activations[k]` the post-ReLU output
    /// of hidden layer `k`.
    pub activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub outputs: Vec<f64>,
    pub samples: usize,
}

pub(crate) fn check_params(spec: &MlpSpec, params: &ParamSet) -> Result<()> {
    let shapes: Vec<(usize, usize)> =
        spec.param_layout().into_iter().map(|(_, _, r, c)| (r, c)).collect();
    if params.same_shapes(&shapes) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "MLP expects parameter shapes {shapes:?}, got {:?}",
            params.shapes()
        )))
    }
}

pub(crate) fn forward_tape(spec: &MlpSpec, params: &ParamSet, inputs: &ParamMatrix) -> Result<MlpTape> {
    check_params(spec, params)?;
    if inputs.cols() != spec.input_dim() {
        return Err(Error::Shape(format!(
            "{} input features, network expects {}",
            inputs.cols(),
            spec.input_dim()
        )));
    }
    let n = inputs.rows();
    let layers = spec.num_layers();
    let mut activations = vec![inputs.as_slice().to_vec()];
    let mut logits = Vec::new();
    let mut idx = 0;
    for k in 0..layers {
        let (din, dout) = (spec.layer_dims[k], spec.layer_dims[k + 1]);
        let w = &params[idx];
        idx += 1;
        let mut z = vec![0.0; n * dout];
        let beta = if spec.use_bias[k] {
            let b = params[idx].as_slice();
            idx += 1;
            for row in z.chunks_exact_mut(dout) {
                row.copy_from_slice(b);
            }
            1.0
        } else {
            0.0
        };
        gemm(
            Operand::new(&activations[k], n, din),
            Operand::transposed(w.as_slice(), dout, din),
            beta,
            &mut z,
        );
        if k + 1 < layers {
            relu_in_place(&mut z);
            activations.push(z);
        } else {
            logits = z;
        }
    }
    let dout = spec.output_dim();
    let mut outputs = logits.clone();
    for row in outputs.chunks_exact_mut(dout) {
        spec.head.apply(row);
    }
    Ok(MlpTape { activations, logits, outputs, samples: n })
}

/// Network outputs for every row of `inputs` (`samples x output_dim`):
/// class probabilities for the softmax heads, raw values for the identity head.
pub fn mlp_forward(spec: &MlpSpec, params: &ParamSet, inputs: &ParamMatrix) -> Result<ParamMatrix> {
    let tape = forward_tape(spec, params, inputs)?;
    ParamMatrix::from_vec(tape.samples, spec.output_dim(), tape.outputs)
}

/// Index of the most probable class per row; ties go to the lower index.
pub fn predict_classes(probs: &ParamMatrix) -> Vec<usize> {
    (0..probs.rows())
        .map(|r| {
            let row = probs.row(r);
            let mut best = 0;
            for (j, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, Head, Network};
    use crate::rng::{stream_rng, Stream};

    fn xor_points() -> ParamMatrix {
        ParamMatrix::from_rows(&[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]).unwrap()
    }

    #[test]
    fn zero_network_is_uniform() {
        let net = Network::zeros(Architecture::Mlp(MlpSpec::xor(true))).unwrap();
        let Architecture::Mlp(spec) = &net.arch else { unreachable!() };
        let probs = mlp_forward(spec, &net.params, &xor_points()).unwrap();
        assert!(probs.as_slice().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn bias_free_net_maps_origin_to_uniform() {
        let mut rng = stream_rng(11, Stream::Init);
        let net = Network::init(Architecture::Mlp(MlpSpec::xor(false)), &mut rng).unwrap();
        let Architecture::Mlp(spec) = &net.arch else { unreachable!() };
        let origin = ParamMatrix::zeros(1, 2);
        let probs = mlp_forward(spec, &net.params, &origin).unwrap();
        assert_eq!(probs.as_slice(), &[0.5, 0.5]);
    }

    /// Straight-line evaluation with explicit loops; shares no code with
    /// the gemm-based forward pass.
    fn naive_forward(params: &ParamSet, x: &[f64]) -> Vec<f64> {
        let (w0, b0, w1, b1) = (&params[0], &params[1], &params[2], &params[3]);
        let mut h = [0.0; 4];
        for j in 0..4 {
            let z = w0.get(j, 0) * x[0] + w0.get(j, 1) * x[1] + b0.get(j, 0);
            h[j] = if z > 0.0 { z } else { 0.0 };
        }
        let mut o = [0.0; 2];
        for c in 0..2 {
            let mut z = b1.get(c, 0);
            for j in 0..4 {
                z += w1.get(c, j) * h[j];
            }
            o[c] = 1.0 / (1.0 + (-z).exp());
        }
        let m = o[0].max(o[1]);
        let e0 = (o[0] - m).exp();
        let e1 = (o[1] - m).exp();
        vec![e0 / (e0 + e1), e1 / (e0 + e1)]
    }

    #[test]
    fn matches_straight_line_reimplementation() {
        for seed in 0..5 {
            let mut rng = stream_rng(seed, Stream::Init);
            let net = Network::init(Architecture::Mlp(MlpSpec::xor(true)), &mut rng).unwrap();
            let Architecture::Mlp(spec) = &net.arch else { unreachable!() };
            let x = xor_points();
            let probs = mlp_forward(spec, &net.params, &x).unwrap();
            for r in 0..4 {
                let expect = naive_forward(&net.params, x.row(r));
                for c in 0..2 {
                    assert!((probs.get(r, c) - expect[c]).abs() < 1e-12);
                }
                assert!((probs.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let net = Network::zeros(Architecture::Mlp(MlpSpec::xor(true))).unwrap();
        let Architecture::Mlp(spec) = &net.arch else { unreachable!() };
        assert!(mlp_forward(spec, &net.params, &ParamMatrix::zeros(3, 3)).is_err());
        let other = MlpSpec::new(vec![2, 3, 2], true, Head::Softmax).unwrap();
        assert!(mlp_forward(&other, &net.params, &xor_points()).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        let p = ParamMatrix::from_rows(&[&[0.5, 0.5], &[0.2, 0.8]]).unwrap();
        assert_eq!(predict_classes(&p), vec![0, 1]);
    }
}
