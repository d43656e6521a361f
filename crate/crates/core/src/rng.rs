//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator (a 64-bit-counter stream cipher)
//! keyed through `SeedableRng::seed_from_u64`, so a seed reproduces the same
//! values on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
