//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! a user seed and a fixed stream tag, so runs are bit-reproducible no matter
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub mod streams {
    pub const USERS: u64 = 1;
    pub const DEMAND: u64 = 2;
    pub const MOBILITY: u64 = 3;
    pub const CHANNEL: u64 = 4;
    pub const SIMBA: u64 = 5;
    pub const RANDOM_SEARCH: u64 = 6;
    pub const POLICY_INIT: u64 = 7;
    pub const ROLLOUT: u64 = 8;
    pub const MINIBATCH: u64 = 9;
    pub const EVALUATION: u64 = 10;
}

/// A generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a seed with an index (episode, sweep point) into a new seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
