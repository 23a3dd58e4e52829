//! Seeding for reproducible ensembles.
//!
//! Every path in an ensemble owns its own ChaCha stream keyed by
//! `path_seed(master, index)`, so results never depend on the order in which
//! worker threads pick up tasks.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-path seed derived from the ensemble master seed.
pub fn path_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> PathRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for path `index` of the ensemble keyed by `master`.
pub fn ensemble_rng(master: u64, index: u64) -> PathRng {
    rng_from_seed(path_seed(master, index))
}
