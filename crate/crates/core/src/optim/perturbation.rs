use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{ParamMatrix, ParamSet};
use crate::rng::standard_normal;

/// One Gaussian perturbation of every parameter matrix, entries i.i.d.
/// `N(0, sigma_sq)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationDraw {
    pub noise: Vec<ParamMatrix>,
    pub sigma_sq: f64,
}

impl PerturbationDraw {
    /// A zero draw shaped like `params`; regret against it is exactly zero.
    pub fn zeros(params: &ParamSet, sigma_sq: f64) -> Self {
        let noise = params.iter().map(|p| ParamMatrix::zeros(p.value.rows(), p.value.cols())).collect();
        Self { noise, sigma_sq }
    }

    /// Build a draw from explicit noise matrices.
    pub fn from_noise(noise: Vec<ParamMatrix>, sigma_sq: f64) -> Result<Self> {
        check_sigma_sq(sigma_sq)?;
        Ok(Self { noise, sigma_sq })
    }

    pub fn check_shapes(&self, params: &ParamSet) -> Result<()> {
        let shapes: Vec<(usize, usize)> = self.noise.iter().map(|m| m.shape()).collect();
        if params.same_shapes(&shapes) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "perturbation shapes {shapes:?} do not match parameters {:?}",
                params.shapes()
            )))
        }
    }

    /// `params + noise`, leaving `params` untouched.
    pub fn perturbed(&self, params: &ParamSet) -> Result<ParamSet> {
        self.check_shapes(params)?;
        let mut out = params.clone();
        for (i, xi) in self.noise.iter().enumerate() {
            out[i].as_mut_slice().iter_mut().zip(xi.as_slice()).for_each(|(t, x)| *t += x);
        }
        Ok(out)
    }
}

pub(crate) fn check_sigma_sq(sigma_sq: f64) -> Result<()> {
    if sigma_sq > 0.0 && sigma_sq.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma^2 must be positive, got {sigma_sq}")))
    }
}

/// Draw `xi ~ N(0, sigma_sq I)` shaped like `params`. Matrices are filled in
/// parameter order, row-major, so the draw is a pure function of the RNG state.
pub fn sample_perturbation<R: Rng + ?Sized>(
    params: &ParamSet,
    sigma_sq: f64,
    rng: &mut R,
) -> Result<PerturbationDraw> {
    check_sigma_sq(sigma_sq)?;
    let sigma = sigma_sq.sqrt();
    let noise = params
        .iter()
        .map(|p| {
            let (r, c) = p.value.shape();
            ParamMatrix::from_fn(r, c, |_, _| sigma * standard_normal(rng))
        })
        .collect();
    Ok(PerturbationDraw { noise, sigma_sq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn non_positive_sigma_is_rejected() {
        let params = ParamSet::single(ParamMatrix::zeros(2, 2));
        let mut rng = stream_rng(0, Stream::Perturbation);
        assert!(sample_perturbation(&params, 0.0, &mut rng).is_err());
        assert!(sample_perturbation(&params, -1.0, &mut rng).is_err());
        assert!(sample_perturbation(&params, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn same_seed_same_draw() {
        let params = ParamSet::single(ParamMatrix::zeros(5, 7));
        let a = sample_perturbation(&params, 0.1, &mut stream_rng(3, Stream::Perturbation)).unwrap();
        let b = sample_perturbation(&params, 0.1, &mut stream_rng(3, Stream::Perturbation)).unwrap();
        assert_eq!(a, b);
        let c = sample_perturbation(&params, 0.1, &mut stream_rng(4, Stream::Perturbation)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturbed_adds_noise_without_touching_source() {
        let params = ParamSet::single(ParamMatrix::from_fn(2, 2, |r, c| (r + c) as f64));
        let draw = sample_perturbation(&params, 0.5, &mut stream_rng(1, Stream::Perturbation)).unwrap();
        let before = params.clone();
        let shifted = draw.perturbed(&params).unwrap();
        assert_eq!(params, before);
        for i in 0..4 {
            let expect = params[0].as_slice()[i] + draw.noise[0].as_slice()[i];
            assert_eq!(shifted[0].as_slice()[i], expect);
        }
    }
}
