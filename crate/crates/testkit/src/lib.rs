//! Shared test support: fixtures, seeded generators and an independent
//! brute-force result oracle.

pub mod fixtures;
pub mod oracle;
pub mod random;
pub mod scenarios;

pub use oracle::Table;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
