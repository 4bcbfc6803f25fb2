//! Deterministic random streams.
//!
//! Every run draws from ChaCha8. A run's generator is seeded from the
//! master seed and placed on stream `run_index`, so runs are independent
//! and reproducible regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

pub fn run_rng(master_seed: u64, run_index: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}
