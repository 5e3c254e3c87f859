//! Counter-based seed derivation.
//!
//! Every random decision in a run draws from a ChaCha8 stream whose seed is
//! a hash of the master seed and the coordinates of the decision (generation,
//! role, individual, episode, ...). Nothing threads RNG state between calls,
//! so evaluation order and parallelism never change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of coordinates into one 64-bit seed.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, parts: &[u64]) -> Rng {
    rng(derive(master, parts))
}

/// Stream tags keep unrelated decisions that share coordinates apart.
pub mod tag {
    pub const EPISODE: u64 = 0x01;
    pub const OPPONENT: u64 = 0x02;
    pub const TEAMMATE: u64 = 0x03;
    pub const REPRODUCE: u64 = 0x04;
    pub const INITIAL: u64 = 0x05;
    pub const TOURNAMENT: u64 = 0x06;
}
