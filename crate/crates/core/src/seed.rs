//! Stable seed derivation.
//!
//! Every random stream in a campaign is derived from the campaign seed through
//! these functions, so results do not depend on worker scheduling.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a parent seed with an integer index.
pub fn derive(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(GOLDEN)))
}

/// Combines a parent seed with a string label (FNV-1a folded through `mix64`).
pub fn derive_str(parent: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive(parent, h)
}

/// Per-dialog seed: `hash(campaign_seed, dialog_index)`.
pub fn dialog_seed(campaign_seed: u64, dialog_index: u64) -> u64 {
    derive(campaign_seed, dialog_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable() {
        // Frozen so that transcripts stay reproducible across releases.
        assert_eq!(mix64(0), 0xe220_a839_7b1d_cdaf);
        assert_ne!(derive(1, 2), derive(2, 1));
        assert_ne!(derive_str(7, "I5"), derive_str(7, "I8"));
    }
}
