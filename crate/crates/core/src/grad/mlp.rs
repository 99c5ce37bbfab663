//! Reverse-mode gradients of the MLP losses.

use super::{accumulate_col_sums, accumulate_outer, GradientSet};
use crate::error::{Error, Result};
use crate::matrix::{gemm, Operand, ParamSet};
use crate::nn::loss::PROB_FLOOR;
use crate::nn::mlp::forward_tape;
use crate::nn::{bce_loss, mse_loss, Batch, Head, MlpSpec, Targets};

/// Loss and exact gradient for `batch`: BCE on labels for the probabilistic
/// heads, MSE on values for the identity head.
pub fn mlp_backprop(spec: &MlpSpec, params: &ParamSet, batch: &Batch) -> Result<(f64, GradientSet)> {
    let tape = forward_tape(spec, params, &batch.inputs)?;
    let n = tape.samples;
    let o = spec.output_dim();
    let (loss, mut delta) = match (&batch.targets, spec.head) {
        (Targets::Labels(labels), head) if head.is_probabilistic() => {
            let probs = crate::matrix::ParamMatrix::from_vec(n, o, tape.outputs.clone())?;
            let loss = bce_loss(&probs, labels)?;
            let mut delta = vec![0.0; n * o];
            for (i, &y) in labels.iter().enumerate() {
                let p = &tape.outputs[i * o..(i + 1) * o];
                // Clamped samples contribute a constant, hence no gradient.
                if p[y] < PROB_FLOOR {
                    continue;
                }
                let d = &mut delta[i * o..(i + 1) * o];
                for j in 0..o {
                    d[j] = (p[j] - f64::from(u8::from(j == y))) / n as f64;
                }
                if head == Head::SigmoidSoftmax {
                    let z = &tape.logits[i * o..(i + 1) * o];
                    for j in 0..o {
                        let s = crate::nn::sigmoid(z[j]);
                        d[j] *= s * (1.0 - s);
                    }
                }
            }
            (loss, delta)
        }
        (Targets::Values(t), Head::Identity) => {
            let loss = mse_loss(&tape.outputs, t.as_slice())?;
            let scale = 2.0 / (n * o) as f64;
            let delta = tape.outputs.iter().zip(t.as_slice()).map(|(y, t)| scale * (y - t)).collect();
            (loss, delta)
        }
        _ => {
            return Err(Error::Shape(format!(
                "head {:?} does not match the target kind of the batch",
                spec.head
            )))
        }
    };

    let layers = spec.num_layers();
    let mut grads = GradientSet::zeros_like(params);
    // Parameter indices of each layer's weight and optional bias.
    let mut index = Vec::with_capacity(layers);
    let mut idx = 0;
    for k in 0..layers {
        let b = spec.use_bias[k].then_some(idx + 1);
        index.push((idx, b));
        idx += 1 + usize::from(spec.use_bias[k]);
    }
    for k in (0..layers).rev() {
        let (din, dout) = (spec.layer_dims[k], spec.layer_dims[k + 1]);
        let (wi, bi) = index[k];
        let a = &tape.activations[k];
        accumulate_outer(grads[wi].as_mut_slice(), &delta, a, n, dout, din);
        if let Some(bi) = bi {
            accumulate_col_sums(grads[bi].as_mut_slice(), &delta, dout);
        }
        if k > 0 {
            let mut prev = vec![0.0; n * din];
            gemm(Operand::new(&delta, n, dout), Operand::new(params[wi].as_slice(), dout, din), 0.0, &mut prev);
            prev.iter_mut().zip(a).for_each(|(d, &h)| {
                if h <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = prev;
        }
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ParamMatrix;
    use crate::nn::{Architecture, Network};
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn single_linear_neuron() {
        // One hidden unit with identity-like ReLU (positive input), then a
        // unit output weight: y = relu(w x) with x = 2, w = 1, target 0.
        let spec = MlpSpec::new(vec![1, 1, 1], false, Head::Identity).unwrap();
        let mut params = Network::zeros(Architecture::Mlp(spec.clone())).unwrap().params;
        params[0].set(0, 0, 1.0);
        params[1].set(0, 0, 1.0);
        let batch = Batch::new(ParamMatrix::column(&[2.0]), Targets::Values(ParamMatrix::column(&[0.0]))).unwrap();
        let (loss, g) = mlp_backprop(&spec, &params, &batch).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(g[0].get(0, 0), 8.0);
        assert_eq!(g[1].get(0, 0), 8.0);
    }

    #[test]
    fn stationary_point_has_zero_gradient() {
        let spec = MlpSpec::new(vec![2, 3, 1], true, Head::Identity).unwrap();
        let net = Network::init(Architecture::Mlp(spec.clone()), &mut stream_rng(1, Stream::Init)).unwrap();
        let x = ParamMatrix::from_rows(&[&[0.1, 0.2], &[-0.4, 0.3]]).unwrap();
        let y = crate::nn::mlp_forward(&spec, &net.params, &x).unwrap();
        let batch = Batch::new(x, Targets::Values(y)).unwrap();
        let (loss, g) = mlp_backprop(&spec, &net.params, &batch).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn head_and_targets_must_agree() {
        let spec = MlpSpec::xor(true);
        let net = Network::zeros(Architecture::Mlp(spec.clone())).unwrap();
        let batch = Batch::new(ParamMatrix::zeros(1, 2), Targets::Values(ParamMatrix::zeros(1, 2))).unwrap();
        assert!(mlp_backprop(&spec, &net.params, &batch).is_err());
    }
}
