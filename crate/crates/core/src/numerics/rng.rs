//! Seedable random streams.
//!
//! The generator is ChaCha8 (`rand_chacha`). A seed fixes the key; sub-stream
//! `i` uses ChaCha's stream counter `i`, so batches are independent and can be
//! regenerated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, index: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `[0, 1)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
