//! Deterministic seed substreams.
//!
//! All randomness flows from one user-visible seed. Components derive their
//! own stream with a label (`"train"`, `"negatives"`, ...) so any stage can
//! be reproduced in isolation. Derivation is FNV-1a over the label mixed
//! into the master seed, finished with SplitMix64 — stable across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x1000_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a named substream seed from the master seed.
pub fn substream_seed(master: u64, label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(master ^ h)
}

/// Seeded generator for a named substream.
pub fn substream_rng(master: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(substream_seed(master, label))
}
