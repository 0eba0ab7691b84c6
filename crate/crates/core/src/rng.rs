//! Reproducible random streams.
//!
//! Every chain gets its own ChaCha8 stream selected by `(seed, chain_index)`:
//! the seed fixes the key and the chain index picks the stream number, so
//! results do not depend on how chains are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Default seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_0000_2017_u64;

/// Independent generator for chain `chain` under `seed`.
pub fn stream(seed: u64, chain: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}
