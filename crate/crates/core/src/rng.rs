//! Seed derivation.
//!
//! A run seed expands into independent ChaCha8 streams, one per purpose.
//! ChaCha is a counter-mode generator, so stream `k` of seed `s` is the same
//! bit sequence on every platform, and two runs that share a seed draw the
//! same initial weights and data noise regardless of which optimizer
//! consumes the perturbation stream afterwards.
//!
//! Gaussian variates come from `rand_distr::StandardNormal` (ziggurat) on
//! top of these streams, scaled by the requested standard deviation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

/// Purpose of a random stream. The discriminant is the ChaCha stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Perturbation = 1,
    Data = 2,
    Landscape = 3,
    Split = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[inline]
pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
