//! The XOR classification set.

use crate::error::{Error, Result};
use crate::matrix::ParamMatrix;
use crate::nn::{Batch, Targets};
use crate::rng::{standard_normal, stream_rng, Stream};

/// Cluster centres and their XOR labels.
pub const XOR_POINTS: [([f64; 2], usize); 4] = [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)];

/// `n_per_cluster` Gaussian samples around each corner of the unit square,
/// cluster by cluster in the order of [`XOR_POINTS`].
pub fn xor_dataset(n_per_cluster: usize, noise_std: f64, seed: u64) -> Result<Batch> {
    if n_per_cluster == 0 {
        return Err(Error::InvalidParameter("need at least one point per cluster".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let mut rng = stream_rng(seed, Stream::Data);
    let mut xs = Vec::with_capacity(8 * n_per_cluster);
    let mut labels = Vec::with_capacity(4 * n_per_cluster);
    for (centre, label) in XOR_POINTS {
        for _ in 0..n_per_cluster {
            for c in centre {
                xs.push(c + noise_std * standard_normal(&mut rng));
            }
            labels.push(label);
        }
    }
    Batch::new(ParamMatrix::from_vec(4 * n_per_cluster, 2, xs)?, Targets::Labels(labels))
}
