//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a single root seed through
//! `derive_seed`, which hashes a path of stream identifiers
//! (command → module → episode) into an independent child seed. Workers
//! never share RNG state: each parallel unit derives its own generator,
//! and results are reduced in a fixed order, so every output is
//! reproducible from the root seed alone.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; good avalanche behavior for seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a path of stream ids.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(root);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0xa076_1d64_78bd_642f)));
    }
    state
}

/// A seeded generator for the given stream path.
pub fn stream_rng(root: u64, path: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(root, path))
}

/// Stream-id constants for the top-level modules.
pub mod streams {
    pub const RECOVERY_EVAL: u64 = 1;
    pub const RECOVERY_OPT: u64 = 2;
    pub const REPLICATION_EST: u64 = 3;
    pub const SIM: u64 = 4;
    pub const RELIABILITY_MC: u64 = 5;
}
