//! Seeded random streams.
//!
//! Every random decision flows from a [`DegradeRng`] built by hashing a 64-bit
//! seed together with a label, so independent consumers never share a stream
//! and results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::image::ImageF;

pub type DegradeRng = ChaCha20Rng;

/// Identifier recorded in manifests; changes whenever stream derivation does.
pub const RNG_ALGORITHM: &str = "chacha20;seed=sha256(domain|seed|label|key);v1";

const DOMAIN: &[u8] = b"degrade-forge/rng/v1";

/// Derives an independent stream keyed by `(seed, label, key)`.
pub fn substream(seed: u64, label: &str, key: &[u8]) -> DegradeRng {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(key);
    let digest: [u8; 32] = h.finalize().into();
    ChaCha20Rng::from_seed(digest)
}

pub fn seeded(seed: u64) -> DegradeRng {
    substream(seed, "root", &[])
}

/// Derives a child seed, e.g. one per dataset item.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, label, &index.to_le_bytes()).next_u64()
}

/// SHA-256 over the image shape and the bit patterns of every sample.
pub fn content_hash(img: &ImageF) -> [u8; 32] {
    let mut h = Sha256::new();
    for d in [img.height(), img.width(), img.channels()] {
        h.update((d as u64).to_le_bytes());
    }
    for v in img.data() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().into()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
