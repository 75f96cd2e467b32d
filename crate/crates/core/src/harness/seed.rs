//! Per-trial seed derivation.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
/// 2^64 / golden ratio, odd.
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit FNV-1a hash of a tag string.
pub fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 output finalizer (multipliers 0xbf58476d1ce4e5b9, 0x94d049bb133111eb).
/// A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` in the stream named by `(base_seed, tag)`.
///
/// For a fixed stream the map from `index` is a bijection (odd-multiplier
/// Weyl step followed by the finalizer), so indices never collide.
pub fn derive_trial_seed(base_seed: u64, tag: &str, index: u64) -> u64 {
    let stream = mix64(base_seed ^ mix64(tag_hash(tag)));
    mix64(stream.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}
