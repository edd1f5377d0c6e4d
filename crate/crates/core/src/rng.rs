//! Seeded generators and deterministic seed derivation.
//!
//! Every stochastic routine in the crate either takes a `u64` seed or a
//! `&mut Generator`. Child seeds are derived by hashing the parent seed with a
//! label, so independent streams (per sample, per key bit, per sweep cell)
//! never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Generator = ChaCha8Rng;

pub fn generator(seed: u64) -> Generator {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from `parent` and an ordered list of labels.
pub fn derive_seed(parent: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn derive_indexed(parent: u64, label: &str, index: usize) -> u64 {
    derive_seed(parent, &[label, &index.to_string()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(7, &["sample", "0"]);
        assert_eq!(a, derive_seed(7, &["sample", "0"]));
        assert_ne!(a, derive_seed(7, &["sample", "1"]));
        assert_ne!(a, derive_seed(8, &["sample", "0"]));
        // label boundaries matter
        assert_ne!(derive_seed(7, &["ab", "c"]), derive_seed(7, &["a", "bc"]));
    }

    #[test]
    fn generator_is_reproducible() {
        let xs: Vec<u64> = (0..4).map(|_| generator(3).random()).collect();
        assert!(xs.windows(2).all(|w| w[0] == w[1]));
    }
}
