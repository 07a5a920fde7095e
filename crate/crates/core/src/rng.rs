//! Deterministic RNG substreams.
//!
//! All randomness in a run flows from one `u64` seed. A substream is named by
//! a purpose tag and an item index, so event 17's smearing draws never depend
//! on how many workers ran or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags. Keep these stable: changing one changes every output that
/// depends on it.
pub mod tag {
    pub const ENSEMBLE: u64 = 0x656e_7365_6d62_6c65;
    pub const GENERATE: u64 = 0x6765_6e65_7261_7465;
    pub const SMEAR: u64 = 0x736d_6561_7200_0000;
    pub const DECAY: u64 = 0x6465_6361_7900_0000;
}

pub fn substream(seed: u64, tag: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
