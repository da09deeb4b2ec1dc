//! Reduction of eviction sets to minimal ones.
//!
//! The algorithms are written against an abstract group test
//! `FnMut(&[T]) -> bool` so they can be exercised on plain integers as well
//! as on simulated memory. The `*_reduce` functions bind them to
//! [`MachineState`] and account for every memory access they cause.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::eviction::{test_any_robust, test_specific, TestConfig};
use crate::memory::{sample_candidate_set, MachineState};
use crate::{derive_seed, VirtAddr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Baseline,
    GroupTesting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// The starting set did not test positive.
    NotEvicting,
    /// Test answers contradicted each other: no block was removable, or the
    /// candidates ran out before the core was complete.
    Inconsistent,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryStrategy {
    /// Depth-first retry of discarded blocks. `depth` caps how many levels
    /// are remembered (`None`: all of them); `max_steps` caps backtracks.
    Backtracking { depth: Option<usize>, max_steps: usize },
    /// Start over on a fresh sample of `set_size` addresses from `pool`.
    /// Restarts are reported as backtracking steps.
    RepeatUntilSuccess { pool: Vec<VirtAddr>, set_size: usize, max_attempts: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionOutcome {
    pub result: Result<Vec<VirtAddr>, FailureKind>,
    /// Explicit memory accesses issued during the call, failures included.
    pub accesses_used: u64,
    pub tests_used: u64,
    pub backtrack_steps: u64,
    /// Oracle verdict: the result is one congruence class of the expected
    /// size (and, for a specific target, the target's class).
    pub verified_congruent: bool,
}

impl ReductionOutcome {
    pub fn is_success(&self) -> bool {
        self.result.is_ok() && self.verified_congruent
    }
}

/// Splits `items` into `k` consecutive blocks whose sizes differ by at most one.
///
/// The first `len % k` blocks get the extra element.
///
/// # Panics
/// If `k == 0`.
pub fn split<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    assert!(k >= 1, "split needs at least one block");
    let (q, r) = (items.len() / k, items.len() % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = q + usize::from(i < r);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

fn without_block<T: Clone>(blocks: &[Vec<T>], skip: usize) -> Vec<T> {
    blocks
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .flat_map(|(_, b)| b.iter().cloned())
        .collect()
}

/// Quadratic reduction. Walks the candidates head first and keeps each one
/// whose removal makes the test fail.
pub fn baseline_core<T: Clone>(
    set: &[T],
    target: usize,
    mut test: impl FnMut(&[T]) -> bool,
) -> Result<Vec<T>, FailureKind> {
    let mut kept: Vec<T> = Vec::with_capacity(target);
    let mut rest = set.to_vec();
    rest.reverse();
    while kept.len() < target {
        let Some(c) = rest.pop() else {
            return Err(FailureKind::Inconsistent);
        };
        let mut probe = kept.clone();
        probe.extend(rest.iter().rev().cloned());
        if !test(&probe) {
            kept.push(c);
        }
    }
    Ok(kept)
}

/// Group-testing reduction: split into `target + 1` blocks and drop the
/// first block whose removal keeps the test positive.
pub fn group_test_core<T: Clone>(
    set: &[T],
    target: usize,
    mut test: impl FnMut(&[T]) -> bool,
) -> Result<Vec<T>, FailureKind> {
    let mut s = set.to_vec();
    while s.len() > target {
        let blocks = split(&s, target + 1);
        let next = (0..blocks.len()).map(|i| without_block(&blocks, i)).find(|cand| test(cand));
        match next {
            Some(cand) => s = cand,
            None => return Err(FailureKind::Inconsistent),
        }
    }
    Ok(s)
}

struct Frame<T> {
    blocks: Vec<Vec<T>>,
    next: usize,
}

/// Group testing that remembers, per level, the blocks not yet tried. When
/// no block of a level passes, or the final set fails a confirmation test,
/// the search resumes at the most recent level with untried blocks.
///
/// Returns the result and the number of backtracking steps taken.
pub fn backtracking_core<T: Clone>(
    set: &[T],
    target: usize,
    depth: Option<usize>,
    max_steps: usize,
    mut test: impl FnMut(&[T]) -> bool,
) -> (Result<Vec<T>, FailureKind>, u64) {
    let mut stack: Vec<Frame<T>> = Vec::new();
    let mut steps = 0u64;
    let mut frame = Frame { blocks: split(set, target + 1), next: 0 };
    let mut current = set.to_vec();
    loop {
        let dead_end = if current.len() <= target {
            if test(&current) {
                return (Ok(current), steps);
            }
            true
        } else {
            let mut found = None;
            while frame.next < frame.blocks.len() {
                let i = frame.next;
                frame.next += 1;
                let cand = without_block(&frame.blocks, i);
                if test(&cand) {
                    found = Some(cand);
                    break;
                }
            }
            match found {
                Some(cand) => {
                    let child = Frame { blocks: split(&cand, target + 1), next: 0 };
                    stack.push(std::mem::replace(&mut frame, child));
                    if depth.is_some_and(|d| stack.len() > d) {
                        stack.remove(0);
                    }
                    current = cand;
                    false
                }
                None => true,
            }
        };
        if dead_end {
            // Resume the closest ancestor that still has untried blocks.
            loop {
                let Some(parent) = stack.pop() else {
                    return (Err(FailureKind::Inconsistent), steps);
                };
                steps += 1;
                if steps > max_steps as u64 {
                    return (Err(FailureKind::BudgetExhausted), steps);
                }
                if parent.next < parent.blocks.len() {
                    current = parent.blocks.concat();
                    frame = parent;
                    break;
                }
            }
        }
    }
}

fn run_measured(
    ms: &mut MachineState,
    body: impl FnOnce(&mut MachineState) -> (Result<Vec<VirtAddr>, FailureKind>, u64),
    verify: impl FnOnce(&mut MachineState, &[VirtAddr]) -> bool,
) -> ReductionOutcome {
    let before = ms.counters();
    let (result, backtrack_steps) = body(ms);
    let after = ms.counters();
    let verified_congruent = match &result {
        Ok(r) => verify(ms, r),
        Err(_) => false,
    };
    ReductionOutcome {
        result,
        accesses_used: after.mem_accesses - before.mem_accesses,
        tests_used: after.test_invocations - before.test_invocations,
        backtrack_steps,
        verified_congruent,
    }
}

fn verify_specific(ms: &mut MachineState, r: &[VirtAddr], x: VirtAddr) -> bool {
    r.len() == ms.assoc() && !r.contains(&x) && ms.count_congruent(r, x) == r.len()
}

fn verify_any(ms: &mut MachineState, r: &[VirtAddr]) -> bool {
    r.len() == ms.assoc() + 1 && ms.all_congruent(r)
}

/// Quadratic reduction of `set` to `a` addresses congruent with `x`.
pub fn baseline_reduce(ms: &mut MachineState, set: &[VirtAddr], x: VirtAddr, tc: &TestConfig) -> ReductionOutcome {
    let a = ms.assoc();
    run_measured(
        ms,
        |ms| (baseline_core(set, a, |s| test_specific(ms, s, x, tc)), 0),
        |ms, r| verify_specific(ms, r, x),
    )
}

/// Linear-time reduction of `set` to `a` addresses congruent with `x`.
pub fn group_test_reduce(ms: &mut MachineState, set: &[VirtAddr], x: VirtAddr, tc: &TestConfig) -> ReductionOutcome {
    let a = ms.assoc();
    run_measured(
        ms,
        |ms| (group_test_core(set, a, |s| test_specific(ms, s, x, tc)), 0),
        |ms, r| verify_specific(ms, r, x),
    )
}

/// Reduction without a target address: shrinks `set` to `a + 1` mutually
/// congruent addresses using the robust arbitrary-address test.
pub fn reduce_any(ms: &mut MachineState, set: &[VirtAddr], tc: &TestConfig, algorithm: Algorithm) -> ReductionOutcome {
    let target = ms.assoc() + 1;
    run_measured(
        ms,
        |ms| {
            let test = |s: &[VirtAddr]| test_any_robust(ms, s, tc);
            let r = match algorithm {
                Algorithm::Baseline => baseline_core(set, target, test),
                Algorithm::GroupTesting => group_test_core(set, target, test),
            };
            (r, 0)
        },
        verify_any,
    )
}

/// Group-testing reduction for `x` with a recovery heuristic on failure.
pub fn reduce_with_recovery(
    ms: &mut MachineState,
    set: &[VirtAddr],
    x: VirtAddr,
    tc: &TestConfig,
    strategy: &RecoveryStrategy,
) -> ReductionOutcome {
    let a = ms.assoc();
    match strategy {
        RecoveryStrategy::Backtracking { depth, max_steps } => run_measured(
            ms,
            |ms| backtracking_core(set, a, *depth, *max_steps, |s| test_specific(ms, s, x, tc)),
            |ms, r| verify_specific(ms, r, x),
        ),
        RecoveryStrategy::RepeatUntilSuccess { pool, set_size, max_attempts, seed } => run_measured(
            ms,
            |ms| {
                let pool: Vec<VirtAddr> = pool.iter().copied().filter(|&y| y != x).collect();
                let mut attempt_set = set.to_vec();
                let mut restarts = 0u64;
                for attempt in 0..*max_attempts {
                    if attempt > 0 {
                        restarts += 1;
                        match sample_candidate_set(&pool, *set_size, derive_seed(*seed, attempt as u64)) {
                            Ok(c) => attempt_set = c.addrs,
                            Err(_) => break,
                        }
                    }
                    if let Ok(r) = group_test_core(&attempt_set, a, |s| test_specific(ms, s, x, tc)) {
                        return (Ok(r), restarts);
                    }
                }
                (Err(FailureKind::BudgetExhausted), restarts)
            },
            |ms, r| verify_specific(ms, r, x),
        ),
    }
}

/// Settings for [`find_all_eviction_sets`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FindAllConfig {
    /// Size of the pool prefix reduced in each round.
    pub subset_size: usize,
    /// Rounds in a row that may fail before the scan gives up.
    pub max_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindAllOutcome {
    /// One minimal eviction set (`a` addresses) per discovered class.
    pub sets: Vec<Vec<VirtAddr>>,
    pub accesses_used: u64,
    pub tests_used: u64,
    pub failed_rounds: usize,
}

/// Scans `pool` for minimal eviction sets of every congruence class it
/// overflows.
///
/// Each round reduces a prefix of the remaining pool to `a + 1` congruent
/// addresses, picks one of them as `x`, and strips from the pool every
/// address `y` for which `a - 1` of the others plus `y` evict `x`.
pub fn find_all_eviction_sets(
    ms: &mut MachineState,
    pool: &[VirtAddr],
    tc: &TestConfig,
    cfg: &FindAllConfig,
) -> Result<FindAllOutcome, ConfigError> {
    if cfg.subset_size == 0 {
        return Err(ConfigError::Test("subset_size must be positive".into()));
    }
    let a = ms.assoc();
    let before = ms.counters();
    let mut remaining = pool.to_vec();
    let mut sets = Vec::new();
    let mut failures = 0;
    let mut failed_rounds = 0;
    while remaining.len() > a && test_any_robust(ms, &remaining, tc) {
        let mut subset = &remaining[..cfg.subset_size.min(remaining.len())];
        if subset.len() < remaining.len() && !test_any_robust(ms, subset, tc) {
            subset = &remaining[..];
        }
        let found = reduce_any(ms, subset, tc, Algorithm::GroupTesting).result;
        let Ok(core) = found else {
            failed_rounds += 1;
            failures += 1;
            if failures > cfg.max_failures {
                break;
            }
            let shift = cfg.subset_size.min(remaining.len()) / 2;
            remaining.rotate_left(shift);
            continue;
        };
        failures = 0;
        let x = core[0];
        let others = &core[1..];
        let mut probe: Vec<VirtAddr> = others[..a - 1].to_vec();
        probe.push(x);
        let members: HashSet<VirtAddr> = core.iter().copied().collect();
        let mut kept = Vec::with_capacity(remaining.len());
        for &y in &remaining {
            if members.contains(&y) {
                continue;
            }
            *probe.last_mut().expect("probe is non-empty") = y;
            if !test_specific(ms, &probe, x, tc) {
                kept.push(y);
            }
        }
        remaining = kept;
        sets.push(others.to_vec());
    }
    let after = ms.counters();
    Ok(FindAllOutcome {
        sets,
        accesses_used: after.mem_accesses - before.mem_accesses,
        tests_used: after.test_invocations - before.test_invocations,
        failed_rounds,
    })
}
