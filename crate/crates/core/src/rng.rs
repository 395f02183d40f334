//! Seeded random streams.
//!
//! Every stochastic routine takes a `&mut SimRng`. Work that fans out over
//! threads first draws one child seed per task from the parent stream, in
//! task order, so parallel and serial runs consume identical streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent child stream from `rng`.
pub fn fork(rng: &mut SimRng) -> SimRng {
    seeded(rng.next_u64())
}

/// Derive `n` child streams, in order.
pub fn fork_many(rng: &mut SimRng, n: usize) -> Vec<SimRng> {
    (0..n).map(|_| fork(rng)).collect()
}
