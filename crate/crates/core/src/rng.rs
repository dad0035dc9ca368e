//! Seed derivation.
//!
//! A master seed fans out to per-task seeds by folding each stream
//! identifier through SplitMix64:
//!
//! ```text
//! h = master
//! for id in stream: h = splitmix64(h ^ splitmix64(id))
//! ```
//!
//! The derived seed depends only on the master seed and the identifiers, so
//! tasks can run in any order or in parallel and still draw the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    stream
        .iter()
        .fold(master, |h, &id| splitmix64(h ^ splitmix64(id)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable stream identifier for a short ASCII tag such as `"train"`.
pub fn tag(name: &str) -> u64 {
    name.bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}
