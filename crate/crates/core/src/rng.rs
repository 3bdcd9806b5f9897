//! Seed splitting.
//!
//! Every random stream is a `ChaCha8Rng` seeded with
//! `splitmix64(seed ^ splitmix64(tag ^ splitmix64(index)))`, so any stream can
//! be recreated from the run seed, a purpose tag and an index alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_INIT: u64 = 0x696e_6974;
pub const TAG_PHASE1: u64 = 0x7068_3161;
pub const TAG_PHASE2: u64 = 0x7068_3262;
pub const TAG_FINITE: u64 = 0x6669_6e69;
pub const TAG_DATA: u64 = 0x6461_7461;
pub const TAG_TRIAL: u64 = 0x7472_6961;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag ^ splitmix64(index)))
}

pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}
