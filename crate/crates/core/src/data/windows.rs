//! Sliding windows for one-step-ahead forecasting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::SeqBatch;

/// Per-feature min-max bounds mapping the series onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    /// Bounds of a row-major `len x dim` series.
    pub fn fit(series: &[f64], dim: usize) -> Self {
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for row in series.chunks_exact(dim) {
            for j in 0..dim {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Self { min, max }
    }

    /// A constant feature maps to zero.
    fn span(&self, j: usize) -> f64 {
        let s = self.max[j] - self.min[j];
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn apply(&self, series: &mut [f64]) {
        let dim = self.min.len();
        for row in series.chunks_exact_mut(dim) {
            for j in 0..dim {
                row[j] = (row[j] - self.min[j]) / self.span(j);
            }
        }
    }

    pub fn invert(&self, series: &mut [f64]) {
        let dim = self.min.len();
        for row in series.chunks_exact_mut(dim) {
            for j in 0..dim {
                row[j] = row[j] * self.span(j) + self.min[j];
            }
        }
    }
}

/// A series with a look-back length. Window `i` covers points
/// `[i, i + lookback)` and its target is point `i + lookback`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    series: Vec<f64>,
    dim: usize,
    lookback: usize,
    pub normalization: Option<Normalization>,
}

/// Cut a row-major `len x dim` series into windows, optionally normalizing it
/// to `[0, 1]` per feature first.
pub fn make_windows(series: &[f64], dim: usize, lookback: usize, normalize: bool) -> Result<WindowedDataset> {
    if dim == 0 || series.len() % dim != 0 {
        return Err(Error::Shape(format!("{} values is not a whole number of {dim}-d points", series.len())));
    }
    let len = series.len() / dim;
    if lookback == 0 || len <= lookback {
        return Err(Error::SeriesTooShort { len, lookback });
    }
    let mut series = series.to_vec();
    let normalization = normalize.then(|| {
        let n = Normalization::fit(&series, dim);
        n.apply(&mut series);
        n
    });
    Ok(WindowedDataset { series, dim, lookback, normalization })
}

impl WindowedDataset {
    /// Number of (window, target) pairs.
    pub fn len(&self) -> usize {
        self.series.len() / self.dim - self.lookback
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    /// The (possibly normalized) series.
    pub fn series(&self) -> &[f64] {
        &self.series
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.series[k * self.dim..(k + 1) * self.dim]
    }

    pub fn window(&self, i: usize) -> &[f64] {
        &self.series[i * self.dim..(i + self.lookback) * self.dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        self.point(i + self.lookback)
    }

    /// `count` window indices spread evenly over the whole dataset.
    pub fn evenly_spaced(&self, count: usize) -> Vec<usize> {
        let n = self.len();
        let count = count.min(n).max(1);
        if count == 1 {
            return vec![0];
        }
        (0..count).map(|k| k * (n - 1) / (count - 1)).collect()
    }

    /// Sequence batch over the given windows. The target at step `t` of
    /// window `i` is point `i + t + 1`, so the last step predicts the
    /// window's target.
    pub fn seq_batch(&self, indices: &[usize]) -> Result<SeqBatch> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Shape(format!("window {bad} of {}", self.len())));
        }
        let (n, t, d) = (indices.len(), self.lookback, self.dim);
        let mut inputs = Vec::with_capacity(n * t * d);
        let mut targets = Vec::with_capacity(n * t * d);
        for step in 0..t {
            for &i in indices {
                inputs.extend_from_slice(self.point(i + step));
                targets.extend_from_slice(self.point(i + step + 1));
            }
        }
        SeqBatch::new(n, t, d, d, inputs, targets)
    }

    /// Windows `0..len` in order.
    pub fn full_batch(&self) -> Result<SeqBatch> {
        self.seq_batch(&(0..self.len()).collect::<Vec<_>>())
    }
}
