//! Named, counter-based random streams.
//!
//! Every stage of every run draws from its own ChaCha stream keyed by
//! `(master_seed, run_index, stage_label)`, so a single stage can be replayed
//! in isolation and parallel workers never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn stream(master_seed: u64, index: u64, label: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(b"pdiqkd-stream-v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(index.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}
