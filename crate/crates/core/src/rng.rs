//! Named, versioned pseudo-random generator used by every randomized step.
//!
//! All draws go through ChaCha8 so outputs replicate bit-for-bit across
//! platforms. Parallel work gets its own ChaCha stream derived from the base
//! seed and the worker index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Recorded in report headers so runs can be replicated elsewhere.
pub const GENERATOR: &str = "chacha8/rand_chacha-0.9/seed_from_u64";

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `index` of the generator rooted at `seed`.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a run index into a base seed (splitmix64 finalizer) for experiments
/// that re-randomize per run.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
