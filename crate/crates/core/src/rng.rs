//! Counter-based random stream derivation.
//!
//! Every stream is a ChaCha20 keystream. The 256-bit key is expanded from the
//! 64-bit root seed with `SeedableRng::seed_from_u64` (the PCG32 expansion
//! pinned by `rand_core`), and the 64-bit ChaCha stream id is the lane index.
//! Streams for distinct indices are disjoint keystreams of the same key, so
//! any implementation of ChaCha20 with the same key expansion reproduces the
//! draws, independent of how lanes are scheduled.
//!
//! Nested lanes (trial, then sub-task) are addressed with [`lane_index`].

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Stream = ChaCha20Rng;

/// Name recorded in run manifests.
pub const GENERATOR: &str = "ChaCha20 (rand_chacha 0.9)";
/// Derivation rule recorded in run manifests.
pub const DERIVATION: &str =
    "key = rand_core::SeedableRng::seed_from_u64(root) [PCG32 expansion]; stream id = lane index; lane index of (group, trial) = group * 2^40 + trial";

/// Independent stream for lane `index` under `root`.
pub fn split_rng(root: u64, index: u64) -> Stream {
    let mut rng = ChaCha20Rng::seed_from_u64(root);
    rng.set_stream(index);
    rng
}

/// Packs a (group, trial) pair into one lane index. Groups separate the
/// sub-experiments of a run; up to 2^40 trials per group.
pub fn lane_index(group: u64, trial: u64) -> u64 {
    debug_assert!(trial < (1 << 40) && group < (1 << 24));
    (group << 40) | trial
}
