//! Hierarchical seed derivation.
//!
//! A run has one seed; every module, worker and sample gets its own stream by
//! hashing the path of indices leading to it. The mixing function is
//! SplitMix64, so nearby paths give unrelated streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the child stream identified by `path` under `root`.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(root), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Named child stream, for module-level seeds.
pub fn derive_named(root: u64, name: &str) -> u64 {
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    derive(root, &[h])
}

pub fn rng(root: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, path))
}
