//! Seeded random streams.
//!
//! Every stream is a `Xoshiro256PlusPlus` generator whose seed is derived by
//! SplitMix64 finalization of `(master_seed, index)`, so parallel workers
//! indexed by seed number draw independent, reproducible sequences.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Stream = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th substream of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master.wrapping_add(GOLDEN)) ^ index.wrapping_mul(GOLDEN).wrapping_add(1))
}

pub fn stream(master: u64, index: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(master, index))
}

/// Uniform draw from `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform(rng: &mut Stream) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Index drawn proportionally to the non-negative `weights`, which sum to `total`.
#[inline]
pub fn sample_index(rng: &mut Stream, weights: &[f64], total: f64) -> usize {
    let mut x = uniform(rng) * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if x < w {
                return i;
            }
            x -= w;
            last = i;
        }
    }
    last
}
