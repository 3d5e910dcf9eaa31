//! The one random generator used throughout the crate.
//!
//! ChaCha8 is specified independently of platform and word size, so a seed
//! reproduces the same stream everywhere.

use rand::SeedableRng;

pub type SeedRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}
