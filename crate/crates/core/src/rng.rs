//! Reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator name recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream = batch index";

/// Independent stream for batch `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
