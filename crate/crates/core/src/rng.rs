//! Seeding rules.
//!
//! Every random stream in the crate is a ChaCha20 generator seeded through
//! `rand_core`'s `seed_from_u64` expansion, so a given `u64` seed yields the
//! same numbers on every platform.
//!
//! Child seeds are derived from a master seed by index, never by drawing from
//! a parent stream: `child_seed(seed, i)` applies the SplitMix64 finalizer to
//! `seed + (i + 1) * 0x9E37_79B9_7F4A_7C15`. Adding or removing trial `j`
//! therefore never changes the stream of trial `i`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
