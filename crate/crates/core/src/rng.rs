//! Counter-style seed derivation. Every random stream is keyed by the master
//! seed plus a tuple of indices (path, component, basis index, ...), so
//! enlarging one dimension of an experiment never perturbs the draws of
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for `seed` and the index tuple `keys`.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix(seed), |acc, &k| mix(acc ^ mix(k)))
}

/// Independent generator for `(seed, keys)`.
pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, keys))
}

/// A single standard normal addressed by `(seed, keys)`.
pub fn normal_at(seed: u64, keys: &[u64]) -> f64 {
    StandardNormal.sample(&mut stream(seed, keys))
}
