//! Seeded random substreams.
//!
//! Every stochastic operation derives its generator from `(seed, stream)`,
//! so trial `t` draws the same numbers no matter which thread runs it or in
//! which order trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
