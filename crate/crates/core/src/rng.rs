//! Deterministic random-number substreams.
//!
//! Every Monte Carlo trial draws from its own ChaCha stream derived from
//! `(seed, index)`, so results are independent of how trials are scheduled
//! across worker threads. Setup draws that are not tied to a trial use the
//! reserved stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream index reserved for one-off setup draws (never used for trials).
pub const SETUP_STREAM: u64 = u64::MAX;

/// The generator for substream `index` of the experiment keyed by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
