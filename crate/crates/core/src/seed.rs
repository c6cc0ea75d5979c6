//! Counter-based seed derivation so any replicate can be rebuilt alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a path of counters (master seed, replicate, stream, ...) to a seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |h, p| splitmix64(h ^ splitmix64(*p)))
}

pub fn rng_for(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parts))
}

/// Stream tags within a replication.
pub mod stream {
    pub const COHORT: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const PERTURB: u64 = 3;
    pub const TRUTH: u64 = 4;
}
