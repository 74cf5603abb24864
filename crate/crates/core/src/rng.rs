//! Reproducible random streams.
//!
//! Every `(seed, replicate)` pair owns an independent ChaCha20 stream: the
//! seed keys the cipher and the replicate index selects the stream id. A
//! replicate therefore draws the same numbers regardless of how many
//! replicates run or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream dedicated to replicate `replicate` of an experiment seeded by `seed`.
pub fn stream(seed: u64, replicate: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
