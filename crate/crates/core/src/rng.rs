//! Seed handling.
//!
//! All randomness flows through [`ChaCha8Rng`] seeded from a 64-bit value, so
//! a seed reproduces the same stream on every platform. Child seeds for
//! resamples, trees and grid points are derived with the SplitMix64 finalizer
//! applied to `(parent, ordinal)`; no generator state is shared between tasks,
//! so the order in which parallel workers run cannot change a result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `ordinal`-th child of `seed`.
pub fn derive_seed(seed: u64, ordinal: u64) -> u64 {
    mix64(mix64(seed) ^ ordinal.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for a named purpose under a base seed, e.g. `stream(seed, 3)`.
pub fn stream(seed: u64, ordinal: u64) -> Rng {
    rng_from_seed(derive_seed(seed, ordinal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derived_seeds_differ_and_repeat() {
        assert_eq!(derive_seed(7, 1), derive_seed(7, 1));
        assert_ne!(derive_seed(7, 1), derive_seed(7, 2));
        assert_ne!(derive_seed(7, 1), derive_seed(8, 1));
    }

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(1, 2), |r, _: u64| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(1, 2), |r, _: u64| Some(r.random())).collect();
        assert_eq!(a, b);
    }
}
