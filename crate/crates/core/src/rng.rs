//! Seeded random streams.
//!
//! Every stochastic component draws from a [`SimRng`] it owns. Sub-streams are
//! derived from a parent seed and a tag so that, for example, channel draws of
//! evaluation episode 17 never depend on how many draws training consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a tag.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix(mix(parent) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tags used by the harness when splitting a run seed.
pub mod tags {
    pub const LAYOUT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const EVAL: u64 = 3;
    pub const POLICY: u64 = 4;
    pub const INIT: u64 = 5;
}
