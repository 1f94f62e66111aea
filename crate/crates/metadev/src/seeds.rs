//! Deterministic RNG stream derivation.
//!
//! Every random decision in a run is drawn from a ChaCha stream whose seed
//! is derived from the master seed, a purpose tag, and integer indices.
//! Results are therefore independent of thread scheduling: two workers
//! never share a stream, and the same (seed, tag, indices) triple always
//! yields the same stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; full-avalanche mixing of a 64-bit word.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed, a purpose tag, and indices.
pub fn derive(master: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut h = mix(master);
    for &b in tag.as_bytes() {
        h = mix(h ^ u64::from(b));
    }
    for &p in parts {
        h = mix(h ^ p);
    }
    h
}

/// A ChaCha stream for the given derivation path.
pub fn stream(master: u64, tag: &str, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, tag, parts))
}

/// Stable hash of a byte slice, for content-derived streams.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = mix(bytes.len() as u64);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = mix(h ^ u64::from_le_bytes(word));
    }
    h
}
