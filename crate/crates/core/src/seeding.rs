//! Deterministic seed derivation. Every random stream in the crate is keyed
//! off a master seed through these helpers so runs are reproducible.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the sub-stream `label` under `master`.
pub fn substream(master: u64, label: u64) -> u64 {
    mix(master ^ mix(label.wrapping_mul(GOLDEN)))
}

/// Folds several words into one seed, order-sensitive.
pub fn combine(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_u64, |acc, &p| mix(acc ^ mix(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_distinct_and_stable() {
        assert_eq!(substream(1, 2), substream(1, 2));
        assert_ne!(substream(1, 2), substream(1, 3));
        assert_ne!(substream(1, 2), substream(2, 2));
        assert_ne!(combine(&[1, 2]), combine(&[2, 1]));
        // pinned so seeds do not drift between releases
        assert_eq!(mix(0), 0xE220_A839_7B1D_CDAF);
    }
}
