//! Independent, reproducible random streams keyed by a master seed and a
//! path of indices (cell, run, replicate, ...). A stream depends only on its
//! key, so work can be split across any number of threads without changing
//! results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xd605_bbb5_8c8a_bd2d))
}

pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let key = path.iter().fold(seed, |s, &i| derive_seed(s, i));
    ChaCha8Rng::seed_from_u64(key)
}
