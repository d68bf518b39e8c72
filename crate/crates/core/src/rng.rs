//! Seeded random streams.
//!
//! Every stochastic routine in the crate takes a 64-bit seed and builds its
//! own [`ChaCha8Rng`] from it, so results depend only on that seed and not on
//! thread scheduling. Independent streams for chain `i` of an experiment are
//! derived with [`split_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from a parent seed:
/// `mix64(mix64(seed) ^ mix64(index + golden))`.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// Fills `out` with independent standard normal draws.
pub fn fill_standard_normal(rng: &mut StreamRng, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}

/// Source of the per-iteration Gaussian noise `e_k` of a chain.
///
/// Exactly one `dim`-vector is drawn per iteration, whatever the update rule,
/// so two chains built from the same seed see the same noise sequence.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: StreamRng,
    buf: Vec<f64>,
}

impl NoiseStream {
    pub fn new(seed: u64, dim: usize) -> Self {
        Self {
            rng: stream(seed),
            buf: vec![0.0; dim],
        }
    }

    pub fn next_noise(&mut self) -> &[f64] {
        fill_standard_normal(&mut self.rng, &mut self.buf);
        &self.buf
    }
}
