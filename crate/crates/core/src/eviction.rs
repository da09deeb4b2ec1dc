//! Timing-style eviction tests run through [`MachineState::access`].
//!
//! Each test repeats its measurement `repetitions` times and takes a
//! majority vote over the per-repetition verdicts. Candidate sets are
//! traversed in the order given, which callers randomize once per set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::memory::{AccessOutcome, Lookup, MachineState};
use crate::VirtAddr;

/// How a single access is classified as slow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Read the LLC hit/miss bit directly.
    MissCount,
    /// Slow iff the observed latency exceeds the threshold.
    Latency(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    pub repetitions: usize,
    pub threshold: ThresholdMode,
    /// Misses Test 3 must exceed. `None` means the associativity.
    pub required_misses: Option<usize>,
    /// Probability that a test reports the opposite of its measurement.
    pub flip_probability: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { repetitions: 10, threshold: ThresholdMode::MissCount, required_misses: None, flip_probability: 0.0 }
    }
}

impl TestConfig {
    /// Single repetition, miss-count classification, no noise.
    pub fn ideal() -> Self {
        Self { repetitions: 1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.repetitions == 0 {
            return Err(ConfigError::Test("repetitions must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(ConfigError::Test("flip_probability must lie in [0, 1]".into()));
        }
        if let ThresholdMode::Latency(t) = self.threshold {
            if !t.is_finite() {
                return Err(ConfigError::Test("latency threshold must be finite".into()));
            }
        }
        Ok(())
    }

    fn is_slow(&self, out: &AccessOutcome) -> bool {
        match self.threshold {
            ThresholdMode::MissCount => out.llc == Lookup::Miss,
            ThresholdMode::Latency(t) => out.latency > t,
        }
    }
}

fn vote(ms: &mut MachineState, tc: &TestConfig, mut rep: impl FnMut(&mut MachineState) -> bool) -> bool {
    ms.counters_mut().test_invocations += 1;
    let positive = (0..tc.repetitions).filter(|_| rep(ms)).count();
    let verdict = 2 * positive > tc.repetitions;
    if tc.flip_probability > 0.0 && ms.rng().random::<f64>() < tc.flip_probability {
        !verdict
    } else {
        verdict
    }
}

/// Test 1: does accessing `set` evict `x`?
///
/// Access `x`, traverse `set`, then time `x` again.
pub fn test_specific(ms: &mut MachineState, set: &[VirtAddr], x: VirtAddr, tc: &TestConfig) -> bool {
    vote(ms, tc, |ms| {
        ms.access(x);
        for &y in set {
            ms.access(y);
        }
        tc.is_slow(&ms.access(x))
    })
}

/// Test 2: is the total time of a second traversal of `set` above threshold?
///
/// With threshold `t`, positive iff the total exceeds
/// `(|set| - 1) * hit + t`, i.e. at least one access looked slow overall.
/// Any delay during the timed pass counts, so this test is noise-prone.
pub fn test_any_aggregate(ms: &mut MachineState, set: &[VirtAddr], tc: &TestConfig) -> Result<bool, ConfigError> {
    let ThresholdMode::Latency(t) = tc.threshold else {
        return Err(ConfigError::Test("the aggregate test needs a latency threshold".into()));
    };
    if set.is_empty() {
        return Err(ConfigError::Test("the aggregate test needs a non-empty set".into()));
    }
    let bound = (set.len() - 1) as f64 * ms.config().latency.hit + t;
    Ok(vote(ms, tc, |ms| {
        for &y in set {
            ms.access(y);
        }
        let total: f64 = set.iter().map(|&y| ms.access(y).latency).sum();
        total > bound
    }))
}

/// Test 3: do more than `required_misses` elements of a second traversal of
/// `set` look slow?
pub fn test_any_robust(ms: &mut MachineState, set: &[VirtAddr], tc: &TestConfig) -> bool {
    let required = tc.required_misses.unwrap_or(ms.assoc());
    vote(ms, tc, |ms| {
        for &y in set {
            ms.access(y);
        }
        let slow = set.iter().filter(|&&y| {
            let out = ms.access(y);
            tc.is_slow(&out)
        });
        slow.count() > required
    })
}
