//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose 64-bit seed
//! is derived from a root seed and a path of stream labels (tree index, node
//! counter, fold id, ...). Derivation folds each label into the state with the
//! SplitMix64 finalizer, so `stream(seed, &[b, node])` is a pure function of its
//! arguments and never depends on thread scheduling or call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and an ordered list of labels.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(seed), |acc, &label| mix64(acc ^ mix64(label)))
}

pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

/// Domain labels keep streams for different purposes disjoint.
pub(crate) mod domain {
    pub const SPLIT: u64 = 0x0053_504c_4954;
    pub const FOLDS: u64 = 0x0046_4f4c_4453;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const FEATURES: u64 = 0x4645_4154;
    pub const SYNTH: u64 = 0x0053_594e_5448;
}
