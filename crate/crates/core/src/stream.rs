//! Counter-based random streams.
//!
//! Every random draw in the generator is addressed by a tuple of counters
//! (master seed, image index, pixel index, ...), hashed into a 64-bit value.
//! Results therefore never depend on iteration order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of `seed` and a sequence of counters.
#[inline]
pub fn derive(seed: u64, counters: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &c in counters {
        h = mix64(h ^ c.wrapping_add(GOLDEN).wrapping_mul(0xff51_afd7_ed55_8ccd));
    }
    h
}

/// Maps a 64-bit hash uniformly onto `0..n` (multiply-shift).
#[inline]
pub fn bounded(h: u64, n: usize) -> usize {
    ((h as u128 * n as u128) >> 64) as usize
}

/// A seeded ChaCha stream for bulk draws (noise synthesis).
pub fn chacha(seed: u64, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, counters))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_counters_give_distinct_hashes() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..1000u64 {
            for j in 0..10u64 {
                assert!(seen.insert(derive(7, &[i, j])));
            }
        }
        assert_ne!(derive(1, &[0]), derive(2, &[0]));
        assert_ne!(derive(1, &[0, 1]), derive(1, &[1, 0]));
    }

    #[test]
    fn bounded_covers_range() {
        let mut counts = [0usize; 25];
        for i in 0..25_000u64 {
            counts[bounded(derive(3, &[i]), 25)] += 1;
        }
        assert!(counts.iter().all(|&c| (800..1200).contains(&c)), "{counts:?}");
    }
}
