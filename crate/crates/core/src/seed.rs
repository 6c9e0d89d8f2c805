//! Seed derivation.
//!
//! Every random decision in the crate flows from a single `u64` base seed.
//! Sub-seeds are derived by folding a path of counters into the base with the
//! SplitMix64 finalizer:
//!
//! ```text
//! derive(base, [])        = base
//! derive(base, [c, ...])  = derive(mix(base ^ mix(c + GOLDEN)), [...])
//! ```
//!
//! so `derive(s, [EXP1, trial])` and `derive(s, [EXP1, trial + 1])` are
//! unrelated streams, and the derivation never depends on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(base, |acc, &c| mix(acc ^ mix(c.wrapping_add(GOLDEN))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
