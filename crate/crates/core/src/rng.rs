//! Seed derivation. Every phase of a run draws from its own ChaCha stream so
//! that changing one phase (say, the number of measurement lookups) does not
//! perturb the random choices made by the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream))
}

pub fn stream(seed: u64, stream: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, stream))
}

/// Named phase streams.
pub mod phase {
    pub const BUILD: u64 = 1;
    pub const SYBILS: u64 = 2;
    pub const TABLES: u64 = 3;
    pub const FRIENDS: u64 = 4;
    pub const CAMPAIGN: u64 = 5;
    pub const WORKLOAD: u64 = 6;
    pub const VOTE: u64 = 7;
}
