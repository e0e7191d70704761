//! Keyed random streams.
//!
//! A stream is a ChaCha8 block function keyed by `(master_seed, tag)` and
//! selected by a 64-bit stream id (the replica index). Nothing about a stream
//! depends on how many other streams exist.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator type handed to every simulator.
pub type Stream = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Independent, reproducible stream for `(master_seed, module_tag, replica_index)`.
pub fn rng_stream(master_seed: u64, module_tag: &str, replica_index: u64) -> Stream {
    let mut key = [0u8; 32];
    let mut s = mix64(master_seed) ^ tag_hash(module_tag);
    for chunk in key.chunks_exact_mut(8) {
        s = mix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replica_index);
    rng
}

/// Uniform on [0, 1) with 53 random bits.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform on (0, 1]; safe to take logarithms of.
#[inline]
pub fn uniform_pos<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Exponential with the given rate.
#[inline]
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -libm::log(uniform_pos(rng)) / rate
}
