//! Deterministic seed derivation.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of tags.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent), |acc, &t| mix64(acc ^ mix64(t)))
}

/// Stream tags used when deriving per-run seeds.
pub mod stream {
    pub const RUN: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const DATA: u64 = 3;
    pub const STAGE1_INIT: u64 = 4;
    pub const STAGE1_ORDER: u64 = 5;
    pub const STAGE2_INIT: u64 = 6;
    pub const STAGE2_ORDER: u64 = 7;
}
