//! Deterministic per-iteration random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `iteration` of the generator seeded by `seed`. Iterations are
/// independent of evaluation order, so parallel runs match serial ones.
pub fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(iteration);
    r
}
