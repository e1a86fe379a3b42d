//! Seed plumbing. Every random draw in the crate goes through a ChaCha8
//! stream keyed by an explicit 64-bit seed, so results never depend on
//! thread scheduling or global state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Sub-stream used for F0 perturbation within one sample.
pub const STREAM_F0: u64 = 1;
/// Sub-stream used for the wet effect chain within one sample.
pub const STREAM_FX: u64 = 2;

/// Generator for `(seed, stream)`. Distinct streams never overlap.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Derives an independent child seed.
pub fn derive(seed: u64, stream: u64) -> u64 {
    rng(seed, stream).next_u64()
}

/// Stable per-file seed from the master seed and the file's canonical
/// relative path (forward slashes). Independent of file ordering.
pub fn file_seed(master_seed: u64, relative_path: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(relative_path.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
