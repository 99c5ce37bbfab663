//! Two-dimensional loss landscapes along random directions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ParamMatrix, ParamSet};
use crate::nn::Objective;
use crate::rng::{standard_normal, stream_rng, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub range0: (f64, f64),
    pub range1: (f64, f64),
    pub steps0: usize,
    pub steps1: usize,
    /// Rescale every row of a direction to the norm of the matching row of
    /// the centre.
    #[serde(default)]
    pub filter_normalize: bool,
    pub seed: u64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self { range0: (-20.0, 20.0), range1: (-15.0, 15.0), steps0: 101, steps1: 101, filter_normalize: false, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandscapeGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `losses[i][j]` is the loss at `centre + alphas[i] d1 + betas[j] d2`;
    /// `+inf` marks cells where the loss was not finite.
    pub losses: Vec<Vec<f64>>,
    pub center: ParamSet,
    pub directions: [Vec<ParamMatrix>; 2],
    pub seed: u64,
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()
}

/// A parameter-shaped standard Gaussian direction.
pub fn random_direction<R: rand::Rng + ?Sized>(center: &ParamSet, rng: &mut R) -> Vec<ParamMatrix> {
    center
        .iter()
        .map(|p| ParamMatrix::from_fn(p.value.rows(), p.value.cols(), |_, _| standard_normal(rng)))
        .collect()
}

fn filter_normalize(direction: &mut [ParamMatrix], center: &ParamSet) {
    for (d, p) in direction.iter_mut().zip(center.iter()) {
        let cols = d.cols();
        for r in 0..d.rows() {
            let target = p.value.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            let row = &mut d.as_mut_slice()[r * cols..(r + 1) * cols];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v *= target / norm);
            }
        }
    }
}

/// Write `center + alpha d1 + beta d2` into `out`, elementwise in that order.
pub fn shifted_params(center: &ParamSet, d1: &[ParamMatrix], d2: &[ParamMatrix], alpha: f64, beta: f64, out: &mut ParamSet) {
    for l in 0..center.len() {
        let c = center[l].as_slice();
        let (u, v) = (d1[l].as_slice(), d2[l].as_slice());
        for (k, o) in out[l].as_mut_slice().iter_mut().enumerate() {
            *o = c[k] + alpha * u[k] + beta * v[k];
        }
    }
}

/// Evaluate `objective` on the grid spanned by two given directions.
pub fn landscape_along(
    objective: &(impl Objective + ?Sized),
    center: &ParamSet,
    directions: [Vec<ParamMatrix>; 2],
    alphas: Vec<f64>,
    betas: Vec<f64>,
    seed: u64,
) -> Result<LandscapeGrid> {
    for d in &directions {
        let shapes: Vec<(usize, usize)> = d.iter().map(ParamMatrix::shape).collect();
        if !center.same_shapes(&shapes) {
            return Err(Error::Shape(format!("direction shapes {shapes:?} vs parameters {:?}", center.shapes())));
        }
    }
    let mut scratch = center.clone();
    let mut losses = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        let mut row = Vec::with_capacity(betas.len());
        for &b in &betas {
            shifted_params(center, &directions[0], &directions[1], a, b, &mut scratch);
            let loss = match objective.loss(&scratch) {
                Ok(v) if v.is_finite() => v,
                Ok(_) | Err(Error::NonFinite(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            row.push(loss);
        }
        losses.push(row);
    }
    Ok(LandscapeGrid { alphas, betas, losses, center: center.clone(), directions, seed })
}

/// Random-direction landscape around `center`; `center` itself is not modified.
pub fn loss_landscape(objective: &(impl Objective + ?Sized), center: &ParamSet, config: &LandscapeConfig) -> Result<LandscapeGrid> {
    if config.steps0 < 2 || config.steps1 < 2 {
        return Err(Error::InvalidParameter("a landscape needs at least 2 steps per axis".into()));
    }
    let mut rng = stream_rng(config.seed, Stream::Landscape);
    let mut d1 = random_direction(center, &mut rng);
    let mut d2 = random_direction(center, &mut rng);
    if config.filter_normalize {
        filter_normalize(&mut d1, center);
        filter_normalize(&mut d2, center);
    }
    landscape_along(
        objective,
        center,
        [d1, d2],
        linspace(config.range0.0, config.range0.1, config.steps0),
        linspace(config.range1.0, config.range1.1, config.steps1),
        config.seed,
    )
}

impl LandscapeGrid {
    /// Grid index of the smallest loss (first one in row-major order).
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.losses.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < self.losses[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Grid index closest to `(alpha, beta) = (0, 0)`.
    pub fn center_index(&self) -> (usize, usize) {
        let nearest = |xs: &[f64]| {
            (0..xs.len()).min_by(|&a, &b| xs[a].abs().total_cmp(&xs[b].abs())).unwrap_or(0)
        };
        (nearest(&self.alphas), nearest(&self.betas))
    }

    /// CSV `alpha,beta,loss`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["alpha", "beta", "loss"])?;
        for (i, &a) in self.alphas.iter().enumerate() {
            for (j, &b) in self.betas.iter().enumerate() {
                w.serialize((a, b, self.losses[i][j]))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
