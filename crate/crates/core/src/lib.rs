//! Ground-truth simulation of a sliced last-level cache behind virtual
//! memory, together with timing-style eviction tests, the quadratic and
//! group-testing reductions for minimal eviction sets, and the probability
//! and cost models that predict how large candidate sets must be.
//!
//! The simulator exposes two kinds of information. Attacker-facing code
//! ([`eviction`], [`reduction`]) only sees hits, misses and latencies
//! through [`MachineState::access`]. Oracle helpers on [`MachineState`]
//! read physical placement directly and are used to verify results.

pub mod cache;
pub mod error;
pub mod eviction;
pub mod experiment;
pub mod memory;
pub mod probability;
pub mod reduction;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use cache::{
    AccessResult, AdaptiveParams, CacheConfig, CacheLocation, CacheState, LeaderMode,
    ReplacementPolicyKind, SetRole, SliceHash,
};
pub use error::{ConfigError, ExperimentError};
pub use eviction::{test_any_aggregate, test_any_robust, test_specific, TestConfig, ThresholdMode};
pub use memory::{
    build_pool, sample_candidate_set, AccessOutcome, AdversaryModel, CandidateSet, Counters,
    LatencyModel, Lookup, MachineConfig, MachineState, TlbConfig, ZoneMask,
};
pub use reduction::{
    baseline_reduce, find_all_eviction_sets, group_test_reduce, reduce_any, reduce_with_recovery,
    split, Algorithm, FailureKind, RecoveryStrategy, ReductionOutcome,
};

/// Virtual address as seen by the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VirtAddr(pub u64);

/// Physical address produced by the page table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhysAddr(pub u64);

/// SplitMix64 finalizer, used as a keyed pseudorandom function.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th independent stream derived from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}
