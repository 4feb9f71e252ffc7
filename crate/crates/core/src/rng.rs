//! Stateless counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, counters...)`, so a value
//! does not depend on which worker produced it or in what order.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a key tuple into 64 random bits. Each word is absorbed through a full
/// finalizer round, so neighbouring counters give unrelated outputs.
#[inline]
pub fn keyed(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(w.wrapping_add(GOLDEN)));
    }
    h
}

/// Uniform in `[0, 1)` with 53 bits of resolution.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Named streams so that different consumers of one seed never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Collision = 1,
    Initialization = 2,
    Trial = 3,
    EcaInit = 4,
}
