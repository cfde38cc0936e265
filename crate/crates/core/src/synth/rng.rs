//! Keyed random streams.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha`) seeded with a 64-bit
//! key folded from its coordinates by the SplitMix64 finalizer. Both are
//! fixed, platform-independent algorithms, so any single row can be
//! regenerated without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_LABEL: u64 = 0x4c41_4245_4c00_0001;
pub(crate) const TAG_SHARED: u64 = 0x5348_4152_4544_0002;
pub(crate) const TAG_MODEL: u64 = 0x4d4f_4445_4c00_0003;
pub(crate) const TAG_SPLIT: u64 = 0x5350_4c49_5400_0004;
pub(crate) const TAG_BOOTSTRAP: u64 = 0x424f_4f54_0000_0005;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn stream_key(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Generator for the stream at `coords` under `seed`.
pub fn keyed_rng(seed: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = keyed_rng(7, &[1, 2, 3]).random();
        let b: u64 = keyed_rng(7, &[1, 2, 3]).random();
        let c: u64 = keyed_rng(7, &[1, 3, 2]).random();
        let d: u64 = keyed_rng(8, &[1, 2, 3]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn key_is_frozen() {
        // pinned so bundles regenerate identically across releases
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
    }
}
