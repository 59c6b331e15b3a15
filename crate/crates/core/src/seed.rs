//! Deterministic seed derivation.
//!
//! Every random stream in the crate is seeded from a user-supplied master
//! seed mixed with the coordinates of the thing being simulated (player
//! names, repetition index, generation, population slot). Derived seeds
//! never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `value` into `state`.
#[inline]
pub fn combine(state: u64, value: u64) -> u64 {
    mix64(state ^ mix64(value))
}

/// FNV-1a over the bytes of `s`. Stable across platforms and releases,
/// unlike `std::hash`.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for one match of a tournament. The pair is put in lexicographic
/// order first, so `(a, b)` and `(b, a)` derive the same seed.
pub fn match_seed(master: u64, name_a: &str, name_b: &str, repetition: usize) -> u64 {
    let (lo, hi) = if name_a <= name_b {
        (name_a, name_b)
    } else {
        (name_b, name_a)
    };
    let s = combine(master, hash_str(lo));
    let s = combine(s, hash_str(hi));
    combine(s, repetition as u64)
}

/// Builds a ChaCha stream from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
