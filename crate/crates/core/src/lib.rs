//! Exterior calculus, Chern–Weil theory and residue computations on
//! chart-based models of complex spaces.

pub mod bundles;
pub mod cechderham;
pub mod checks;
pub mod chernweil;
pub mod cli;
pub mod error;
pub mod extendability;
pub mod fields;
pub mod forms;
pub mod geometry;
pub mod mesh;
pub mod models;
pub mod report;
pub mod residues;
pub mod scene;

pub use error::{Error, Result};

/// Seed used wherever randomness enters a computation.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Deterministic generator for sampling.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
