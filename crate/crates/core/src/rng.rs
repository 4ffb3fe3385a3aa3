//! Seeded random streams. Every randomized routine in the crate draws from
//! this generator so that runs are reproducible from a single `u64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Recorded in reports next to the seed.
pub const RNG_ALGORITHM: &str = "ChaCha8";

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` derived from `seed`, used for per-trial RNGs.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
