//! Stable seed derivation. Seeds must not depend on the std hasher, thread
//! count or cell execution order.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a key path into one seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_u64, |acc, &p| mix(acc ^ mix(p)))
}

/// FNV-1a over the bytes of `s`.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Phase tags mixed into per-session seeds.
pub mod phase {
    pub const NOISE: u64 = 1;
    pub const PREDICT: u64 = 2;
    pub const REAL: u64 = 3;
    pub const LANDSCAPE: u64 = 4;
}
