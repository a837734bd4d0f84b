//! Seed derivation. Every random stream in a run is a ChaCha8 generator keyed
//! by the run seed plus a tag naming its purpose, so independent components
//! (per-party keys, per-party encoders, per-tree bootstraps) never share state
//! and adding a party does not perturb the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic sub-seed for `tag` under `seed`.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    let out = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&out[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rng(derive_seed(seed, tag))`.
pub fn tagged_rng(seed: u64, tag: &str) -> ChaCha8Rng {
    rng(derive_seed(seed, tag))
}
