//! Deterministic random stream splitting.
//!
//! Every random draw in a run comes from a ChaCha8 stream whose seed is
//! derived from the master seed and a path of integers such as
//! `(trial, scan, component, purpose)`. Streams therefore do not depend on
//! thread scheduling or on how many draws other streams consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Measurement generation.
pub const PURPOSE_SCAN: u64 = 1;
/// Gibbs budget allocation across components.
pub const PURPOSE_ALLOCATE: u64 = 2;
/// Gibbs chain of one component.
pub const PURPOSE_GIBBS: u64 = 3;
/// Per-scan filter seed.
pub const PURPOSE_FILTER: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for the given path below `seed`.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}
