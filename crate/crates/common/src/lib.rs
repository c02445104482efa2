//! Shared plumbing for the hefl workspace: deterministic hierarchical RNG
//! streams and small statistics helpers.

pub mod rng;
pub mod stats;

pub use rng::SeedTree;
