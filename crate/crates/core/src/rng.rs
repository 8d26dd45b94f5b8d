//! Seeded random streams.
//!
//! All randomness goes through ChaCha8, whose output is stable across
//! platforms and crate versions. Independent consumers get independent
//! streams of the same seed rather than sharing one generator, so the order
//! in which they run never changes what they draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit hash of an identifier (first eight bytes of SHA-256).
pub fn id_hash(id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Per-client training stream: `master_seed ⊕ hash(client_id)`.
pub fn client_rng(master_seed: u64, client_id: &str) -> SimRng {
    ChaCha8Rng::seed_from_u64(master_seed ^ id_hash(client_id))
}
