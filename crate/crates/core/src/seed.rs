//! Deterministic derivation of independent sub-seeds from a master seed.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine a master seed with a path of labels into a new seed. Distinct
/// label paths give statistically independent streams.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix(seed), |acc, &l| mix(acc ^ mix(l)))
}

/// Stable numeric labels for the consumers of a master seed.
pub mod label {
    pub const CHANNEL: u64 = 1;
    pub const LOSS: u64 = 2;
    pub const TRAJECTORY: u64 = 3;
}
