//! Labeled deterministic random streams.
//!
//! A stream is identified by `(seed, label)`. The ChaCha8 key is the SHA-256
//! digest of the little-endian seed followed by the label bytes, so streams
//! are stable across platforms and distinct labels never share state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64, stream_label: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(stream_label.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    const PINNED: u64 = 7722907448554260090;

    fn draws(seed: u64, label: &str) -> Vec<u64> {
        let mut rng = seeded_rng(seed, label);
        (0..100).map(|_| rng.random()).collect()
    }

    #[test]
    fn same_seed_and_label_repeat() {
        assert_eq!(draws(42, "demand"), draws(42, "demand"));
    }

    #[test]
    fn labels_separate_streams() {
        assert_ne!(draws(42, "demand"), draws(42, "drivers"));
    }

    #[test]
    fn seeds_separate_streams() {
        assert_ne!(draws(42, "demand"), draws(43, "demand"));
    }

    #[test]
    fn first_draw_is_pinned() {
        // guards against silent changes to the key derivation
        assert_eq!(draws(42, "demand")[0], PINNED);
    }
}
