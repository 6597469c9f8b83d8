//! Per-path random streams.
//!
//! Every Monte Carlo path `k` draws from ChaCha8 keyed by the master seed
//! with stream id `k`. Paths are therefore independent of each other and of
//! the order or thread they run on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// Stream for path `index` under `master_seed`.
pub fn path_rng(master_seed: u64, index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
