//! Deterministic RNG stream derivation.
//!
//! Every stochastic routine in this crate (sample simulation, bootstrap
//! replications, Monte Carlo replicates) draws from a `ChaCha8` stream whose
//! seed is derived from a master seed plus a list of integer tags (scenario
//! hash, replicate index, ...) through a 64-bit avalanche mixer. Streams are
//! therefore independent of scheduling: a replication gets the same stream
//! whether it runs on one worker or eight.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer: a full-avalanche 64-bit mixing step.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a master seed with an ordered list of tags into one 64-bit seed.
///
/// Each tag is absorbed through [`mix64`], so permuting tags or changing any
/// single tag yields an unrelated seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = mix64(master ^ 0x6c62_272e_07bb_0142);
    for &t in tags {
        state = mix64(state ^ mix64(t));
    }
    state
}

/// Builds the ChaCha8 stream identified by `(master, tags)`.
pub fn derive_stream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

/// Stable 64-bit hash of a string id (FNV-1a), used to tag scenario streams.
pub fn hash_id(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
