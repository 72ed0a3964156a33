//! Seeded, label-addressable random streams.
//!
//! A [`SimRng`] is a ChaCha8 stream keyed by a 256-bit key. Child streams are
//! derived from the *key* and a label, never from the parent's position, so
//! consuming numbers from one stream cannot shift any other stream.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct SimRng {
    key: [u8; 32],
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn from_seed(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"fedlfd/root");
        hasher.update(seed.to_le_bytes());
        Self::from_key(hasher.finalize().into())
    }

    fn from_key(key: [u8; 32]) -> Self {
        SimRng {
            key,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Independent child stream addressed by `label`.
    pub fn fork(&self, label: &str) -> SimRng {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        Self::from_key(hasher.finalize().into())
    }

    /// Child stream addressed by a label and an index, e.g. `("node", 3)`.
    pub fn fork_indexed(&self, label: &str, index: u64) -> SimRng {
        self.fork(&format!("{label}#{index}"))
    }

    /// Position in the stream, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn key(&self) -> [u8; 32] {
        self.key
    }

    /// Restores a stream from its key and word position.
    pub fn restore(key: [u8; 32], word_pos: u128) -> Self {
        let mut rng = Self::from_key(key);
        rng.inner.set_word_pos(word_pos);
        rng
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
