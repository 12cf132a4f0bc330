//! Counter-based random streams.
//!
//! Every stochastic unit of work (a Monte Carlo trial, a bootstrap replicate,
//! a synthetic query) draws from its own ChaCha8 stream: the key comes from the
//! run seed via `seed_from_u64`, the 64-bit stream id is the unit's index.
//! Results therefore depend only on `(seed, index)`, never on scheduling or
//! thread count, and reproduce across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
