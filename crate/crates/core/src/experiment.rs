//! Batch experiments: rate curves, per-set sweeps, cost scaling, model
//! tables and pool scans.
//!
//! Every trial runs on its own machine seeded with
//! `derive_seed(derive_seed(seed, key), trial)`, so results do not depend on
//! how trials are scheduled across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{CacheConfig, LeaderMode, ReplacementPolicyKind, SetRole};
use crate::error::{ConfigError, ExperimentError};
use crate::eviction::{test_any_robust, test_specific, TestConfig};
use crate::memory::{build_pool, sample_candidate_set, AdversaryModel, MachineConfig, MachineState, TlbConfig};
use crate::probability::{
    expected_search_cost, optimal_initial_size, prob_eviction_any, prob_eviction_specific, EvictionMode,
    EvictionModel,
};
use crate::reduction::{
    baseline_reduce, find_all_eviction_sets, group_test_reduce, reduce_any, reduce_with_recovery, Algorithm,
    FailureKind, FindAllConfig, RecoveryStrategy, ReductionOutcome,
};
use crate::stats::log_log_slope;
use crate::{derive_seed, VirtAddr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    SkylakeLike,
    HaswellLike,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineSpec {
    pub preset: Preset,
    /// Full geometry, required for the custom preset.
    pub cache: Option<CacheConfig>,
    pub policy: Option<ReplacementPolicyKind>,
    pub leader_mode: Option<LeaderMode>,
    pub tlb: bool,
    /// TLB shape; defaults to the preset's.
    pub tlb_config: Option<TlbConfig>,
    pub jitter_sigma: f64,
}

impl Default for MachineSpec {
    fn default() -> Self {
        Self {
            preset: Preset::SkylakeLike,
            cache: None,
            policy: None,
            leader_mode: None,
            tlb: false,
            tlb_config: None,
            jitter_sigma: 0.0,
        }
    }
}

impl MachineSpec {
    pub fn cache_config(&self) -> Result<CacheConfig, ConfigError> {
        let mut cfg = match (self.preset, &self.cache) {
            (Preset::Custom, Some(c)) => c.clone(),
            (Preset::Custom, None) => {
                return Err(ConfigError::Experiment("the custom preset needs a [machine.cache] section".into()))
            }
            (_, Some(_)) => {
                return Err(ConfigError::Experiment("[machine.cache] is only allowed with the custom preset".into()))
            }
            (Preset::SkylakeLike, None) => CacheConfig::skylake_like(),
            (Preset::HaswellLike, None) => CacheConfig::haswell_like(),
        };
        if let Some(p) = self.policy {
            cfg.policy = p;
        }
        if let Some(m) = self.leader_mode {
            cfg.adaptive.leader_mode = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn machine_config(&self, page_bits: u32) -> Result<MachineConfig, ConfigError> {
        let mut mc = MachineConfig::new(self.cache_config()?, page_bits);
        if self.tlb {
            mc.tlb = Some(self.tlb_config.unwrap_or(match self.preset {
                Preset::HaswellLike => TlbConfig::haswell(),
                _ => TlbConfig::skylake(),
            }));
        }
        mc.latency.jitter_sigma = self.jitter_sigma;
        mc.validate()?;
        Ok(mc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", try_from = "RawAdversary")]
pub enum AdversarySpec {
    HugePage,
    #[default]
    #[serde(rename = "4kb")]
    FourK,
    Limit,
    Custom { page_bits: u32, controlled_bits: u32 },
}

#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum AdversaryKind {
    HugePage,
    #[serde(rename = "4kb")]
    FourK,
    Limit,
    Custom,
}

// Serde ignores stray keys next to a unit variant's tag, so parse flat and check.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    kind: AdversaryKind,
    page_bits: Option<u32>,
    controlled_bits: Option<u32>,
}

impl TryFrom<RawAdversary> for AdversarySpec {
    type Error = String;

    fn try_from(r: RawAdversary) -> Result<Self, String> {
        match (r.kind, r.page_bits, r.controlled_bits) {
            (AdversaryKind::Custom, Some(page_bits), Some(controlled_bits)) => {
                Ok(AdversarySpec::Custom { page_bits, controlled_bits })
            }
            (AdversaryKind::Custom, _, _) => Err("custom adversary needs page_bits and controlled_bits".into()),
            (_, None, None) => Ok(match r.kind {
                AdversaryKind::HugePage => AdversarySpec::HugePage,
                AdversaryKind::FourK => AdversarySpec::FourK,
                _ => AdversarySpec::Limit,
            }),
            _ => Err("page_bits and controlled_bits are only accepted for the custom adversary".into()),
        }
    }
}

impl AdversarySpec {
    pub fn model(&self, cfg: &CacheConfig) -> Result<AdversaryModel, ConfigError> {
        let m = match *self {
            AdversarySpec::HugePage => AdversaryModel::huge_page(cfg),
            AdversarySpec::FourK => AdversaryModel::four_k(cfg),
            AdversarySpec::Limit => AdversaryModel::limit(cfg),
            AdversarySpec::Custom { page_bits, controlled_bits } => {
                AdversaryModel { page_bits, controlled_bits, fixed_offset: 0 }
            }
        };
        m.validate(cfg)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// Test 1 against a fixed target address.
    Specific,
    /// Test 3, no target.
    Arbitrary,
}

/// Recovery heuristic as configured; the pool for restarts is built per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RecoverySpec {
    Backtracking { depth: Option<usize>, max_steps: usize },
    RepeatUntilSuccess { max_attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub test_kind: TestKind,
    pub algorithm: Algorithm,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub recovery: Option<RecoverySpec>,
    /// Addresses in the buffer candidates are drawn from, target included.
    /// `None` sizes the buffer to `n + 1`.
    pub pool_size: Option<usize>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            test_kind: TestKind::Specific,
            algorithm: Algorithm::GroupTesting,
            n_values: vec![1000, 2000, 3000],
            trials: 100,
            seed: 1,
            recovery: None,
            pool_size: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Pool stride `2^(ℓ + 12 - ℓ)`: 4 KB-style pools on huge pages that
    /// spread over many set indexes.
    Arbitrary,
    /// Pool stride `2^(ℓ + c)`: every candidate shares the target set index.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub set_indexes: Vec<u32>,
    pub n: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { mode: SweepMode::Arbitrary, set_indexes: (0..1024).step_by(16).collect(), n: 3000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSpec {
    pub algorithms: Vec<Algorithm>,
    /// Fresh sets drawn per trial before giving up on finding an evicting one.
    pub max_draws: usize,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self { algorithms: vec![Algorithm::GroupTesting, Algorithm::Baseline], max_draws: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FindAllSpec {
    pub pool_sizes: Vec<usize>,
    /// Defaults to the optimal arbitrary-address size for the adversary.
    pub subset_size: Option<usize>,
    pub max_failures: usize,
}

impl Default for FindAllSpec {
    fn default() -> Self {
        Self { pool_sizes: vec![2000, 4000, 8000], subset_size: None, max_failures: 5 }
    }
}

/// Complete description of one experiment campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub machine: MachineSpec,
    pub adversary: AdversarySpec,
    pub test: TestConfig,
    pub run: RunSpec,
    pub sweep: SweepSpec,
    pub scaling: ScalingSpec,
    pub find_all: FindAllSpec,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let cfg = self.machine.cache_config()?;
        let adv = self.adversary.model(&cfg)?;
        self.machine.machine_config(adv.page_bits)?;
        self.test.validate()?;
        if self.run.trials == 0 {
            return Err(ConfigError::Experiment("trials must be at least 1".into()));
        }
        if self.run.n_values.is_empty() {
            return Err(ConfigError::Experiment("n_values is empty".into()));
        }
        if self.run.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Experiment("n_values must be strictly increasing".into()));
        }
        if self.run.n_values[0] == 0 {
            return Err(ConfigError::Experiment("n_values must be positive".into()));
        }
        match self.run.recovery {
            Some(RecoverySpec::RepeatUntilSuccess { max_attempts: 0 }) => {
                return Err(ConfigError::Experiment("max_attempts must be at least 1".into()))
            }
            Some(RecoverySpec::Backtracking { depth: Some(0), .. }) => {
                return Err(ConfigError::Experiment("backtracking depth must be at least 1".into()))
            }
            _ => {}
        }
        if let Some(p) = self.run.pool_size {
            let need = self.run.n_values.last().copied().unwrap_or(0) + 1;
            if p < need {
                return Err(ConfigError::Experiment(format!("pool_size {p} is smaller than n + 1 = {need}")));
            }
        }
        if self.run.recovery.is_some() && self.run.test_kind == TestKind::Arbitrary {
            return Err(ConfigError::Experiment("recovery heuristics need a specific target".into()));
        }
        Ok(())
    }

    fn cache_and_adversary(&self) -> Result<(CacheConfig, AdversaryModel), ConfigError> {
        self.validate()?;
        let cfg = self.machine.cache_config()?;
        let adv = self.adversary.model(&cfg)?;
        Ok((cfg, adv))
    }
}

/// Aggregated outcome of all trials at one set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub trials: usize,
    /// Fraction of sets the eviction test called positive.
    pub eviction_rate: f64,
    /// Fraction of trials ending in an oracle-verified minimal set.
    pub reduction_rate: f64,
    /// Mean accesses and tests per reduction, over trials that ran one.
    pub mean_accesses: f64,
    pub mean_tests: f64,
    pub fail_not_evicting: usize,
    pub fail_inconsistent: usize,
    pub fail_budget: usize,
    /// Fraction of sets that were eviction sets according to the oracle.
    pub oracle_eviction_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrialRecord {
    test_positive: bool,
    truly_evicting: bool,
    reduction: Option<(bool, Option<FailureKind>, u64, u64)>,
}

impl TrialRecord {
    fn failure(&self) -> Option<FailureKind> {
        match self.reduction {
            Some((true, _, _, _)) => None,
            Some((false, Some(FailureKind::BudgetExhausted), _, _)) => Some(FailureKind::BudgetExhausted),
            _ if !self.test_positive || !self.truly_evicting => Some(FailureKind::NotEvicting),
            _ => Some(FailureKind::Inconsistent),
        }
    }
}

fn aggregate(n: usize, records: &[TrialRecord]) -> RatePoint {
    let trials = records.len();
    let frac = |k: usize| k as f64 / trials as f64;
    let ran: Vec<_> = records.iter().filter_map(|r| r.reduction).collect();
    type Ran = (bool, Option<FailureKind>, u64, u64);
    let mean_of = |f: fn(&Ran) -> u64| {
        if ran.is_empty() {
            0.0
        } else {
            ran.iter().map(f).sum::<u64>() as f64 / ran.len() as f64
        }
    };
    let count = |k: FailureKind| records.iter().filter(|r| r.failure() == Some(k)).count();
    RatePoint {
        n,
        trials,
        eviction_rate: frac(records.iter().filter(|r| r.test_positive).count()),
        reduction_rate: frac(records.iter().filter(|r| r.failure().is_none()).count()),
        mean_accesses: mean_of(|r| r.2),
        mean_tests: mean_of(|r| r.3),
        fail_not_evicting: count(FailureKind::NotEvicting),
        fail_inconsistent: count(FailureKind::Inconsistent),
        fail_budget: count(FailureKind::BudgetExhausted),
        oracle_eviction_rate: frac(records.iter().filter(|r| r.truly_evicting).count()),
    }
}

fn summarize(outcome: &ReductionOutcome) -> (bool, Option<FailureKind>, u64, u64) {
    (outcome.is_success(), outcome.result.as_ref().err().copied(), outcome.accesses_used, outcome.tests_used)
}

fn reduce_specific(
    spec: &ExperimentSpec,
    ms: &mut MachineState,
    set: &[VirtAddr],
    x: VirtAddr,
    restart_pool: &[VirtAddr],
    seed: u64,
) -> ReductionOutcome {
    let tc = &spec.test;
    match spec.run.recovery {
        None => match spec.run.algorithm {
            Algorithm::Baseline => baseline_reduce(ms, set, x, tc),
            Algorithm::GroupTesting => group_test_reduce(ms, set, x, tc),
        },
        Some(RecoverySpec::Backtracking { depth, max_steps }) => {
            reduce_with_recovery(ms, set, x, tc, &RecoveryStrategy::Backtracking { depth, max_steps })
        }
        Some(RecoverySpec::RepeatUntilSuccess { max_attempts }) => {
            let strategy = RecoveryStrategy::RepeatUntilSuccess {
                pool: restart_pool.to_vec(),
                set_size: set.len(),
                max_attempts,
                seed,
            };
            reduce_with_recovery(ms, set, x, tc, &strategy)
        }
    }
}

/// One test-then-reduce trial for target `x` on candidate set `set`.
fn specific_trial(
    spec: &ExperimentSpec,
    ms: &mut MachineState,
    set: &[VirtAddr],
    x: VirtAddr,
    restart_pool: &[VirtAddr],
    seed: u64,
) -> TrialRecord {
    let truly_evicting = ms.is_eviction_set_for(set, x);
    let test_positive = test_specific(ms, set, x, &spec.test);
    let reduction = test_positive.then(|| summarize(&reduce_specific(spec, ms, set, x, restart_pool, seed)));
    TrialRecord { test_positive, truly_evicting, reduction }
}

fn rate_trial(spec: &ExperimentSpec, mc: &MachineConfig, adv: &AdversaryModel, n: usize, seed: u64) -> Result<TrialRecord, ConfigError> {
    let mut ms = MachineState::new(mc.clone(), seed)?;
    match spec.run.test_kind {
        TestKind::Specific => {
            let pool_len = match (spec.run.pool_size, spec.run.recovery) {
                (Some(p), _) => p,
                (None, Some(RecoverySpec::RepeatUntilSuccess { .. })) => 4 * n + 1,
                (None, _) => n + 1,
            };
            let pool = build_pool(&mut ms, pool_len, adv, derive_seed(seed, 1))?;
            let x = pool[0];
            let set = sample_candidate_set(&pool[1..], n, derive_seed(seed, 2))?.addrs;
            Ok(specific_trial(spec, &mut ms, &set, x, &pool[1..], derive_seed(seed, 3)))
        }
        TestKind::Arbitrary => {
            let pool = build_pool(&mut ms, spec.run.pool_size.unwrap_or(n), adv, derive_seed(seed, 1))?;
            let set = sample_candidate_set(&pool, n, derive_seed(seed, 2))?.addrs;
            let truly_evicting = ms.is_eviction_set_any(&set);
            let test_positive = test_any_robust(&mut ms, &set, &spec.test);
            let reduction = test_positive
                .then(|| summarize(&reduce_any(&mut ms, &set, &spec.test, spec.run.algorithm)));
            Ok(TrialRecord { test_positive, truly_evicting, reduction })
        }
    }
}

fn run_trials<T: Send>(
    trials: usize,
    seed: u64,
    f: impl Fn(u64) -> Result<T, ConfigError> + Sync,
) -> Result<Vec<T>, ConfigError> {
    (0..trials as u64).into_par_iter().map(|t| f(derive_seed(seed, t))).collect()
}

/// Eviction and reduction rates for every configured set size.
pub fn run_rate_experiment(spec: &ExperimentSpec) -> Result<Vec<RatePoint>, ExperimentError> {
    let (_, adv) = spec.cache_and_adversary()?;
    let mc = spec.machine.machine_config(adv.page_bits)?;
    let mut out = Vec::with_capacity(spec.run.n_values.len());
    for &n in &spec.run.n_values {
        let base = derive_seed(spec.run.seed, n as u64);
        let records = run_trials(spec.run.trials, base, |s| rate_trial(spec, &mc, &adv, n, s))?;
        out.push(aggregate(n, &records));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub set_index: u32,
    /// Role of the index under the leader assignment a fresh machine starts with.
    pub role: SetRole,
    pub point: RatePoint,
}

/// Eviction and reduction rates for targets in individual set indexes,
/// on huge pages.
pub fn run_per_set_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>, ExperimentError> {
    spec.validate()?;
    let cfg = spec.machine.cache_config()?;
    let mc = spec.machine.machine_config(21)?;
    let sets = cfg.sets_per_slice() as u32;
    if let Some(&bad) = spec.sweep.set_indexes.iter().find(|&&t| t >= sets) {
        return Err(ConfigError::Experiment(format!("set index {bad} out of range")).into());
    }
    if spec.sweep.n == 0 {
        return Err(ConfigError::Experiment("sweep n must be positive".into()).into());
    }
    let gamma = match spec.sweep.mode {
        SweepMode::Arbitrary => AdversaryModel::four_k(&cfg).controlled_bits,
        SweepMode::Partial => cfg.set_bits,
    };
    let role_probe = MachineState::new(mc.clone(), spec.run.seed)?;
    let mut out = Vec::new();
    for &t in &spec.sweep.set_indexes {
        let line_offset = u64::from(t) << cfg.line_bits;
        let pool_adv = AdversaryModel {
            page_bits: 21,
            controlled_bits: gamma,
            fixed_offset: line_offset & ((1u64 << (gamma + cfg.line_bits)) - 1),
        };
        let target_adv = AdversaryModel { fixed_offset: line_offset, ..AdversaryModel::huge_page(&cfg) };
        let base = derive_seed(spec.run.seed, u64::from(t));
        let records = run_trials(spec.run.trials, base, |seed| {
            let mut ms = MachineState::new(mc.clone(), seed)?;
            let x = build_pool(&mut ms, 1, &target_adv, derive_seed(seed, 4))?[0];
            let pool = build_pool(&mut ms, spec.sweep.n, &pool_adv, derive_seed(seed, 1))?;
            let set = sample_candidate_set(&pool, spec.sweep.n, derive_seed(seed, 2))?.addrs;
            Ok(specific_trial(spec, &mut ms, &set, x, &pool, derive_seed(seed, 3)))
        })?;
        out.push(SweepPoint {
            set_index: t,
            role: role_probe.cache().set_role(t),
            point: aggregate(spec.sweep.n, &records),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub algorithm: Algorithm,
    /// Trials that found an evicting set and ran the reduction.
    pub trials: usize,
    pub mean_accesses: f64,
    pub mean_tests: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares exponent of accesses against `n`, per algorithm.
    pub exponents: Vec<(Algorithm, f64)>,
}

/// Reduction cost against set size. Each trial draws sets until one tests
/// positive, then reduces that same set with every configured algorithm.
pub fn run_scaling_experiment(spec: &ExperimentSpec) -> Result<ScalingReport, ExperimentError> {
    let (_, adv) = spec.cache_and_adversary()?;
    if spec.run.n_values.len() < 3 {
        return Err(ExperimentError::FitRefused(format!(
            "need at least 3 set sizes, got {}",
            spec.run.n_values.len()
        )));
    }
    if spec.scaling.algorithms.is_empty() {
        return Err(ConfigError::Experiment("no algorithms to compare".into()).into());
    }
    let mc = spec.machine.machine_config(adv.page_bits)?;
    let algs = &spec.scaling.algorithms;
    let mut rows = Vec::new();
    for &n in &spec.run.n_values {
        let base = derive_seed(spec.run.seed, n as u64);
        let per_trial = run_trials(spec.run.trials, base, |seed| {
            let mut ms = MachineState::new(mc.clone(), seed)?;
            for draw in 0..spec.scaling.max_draws as u64 {
                let pool = build_pool(&mut ms, n + 1, &adv, derive_seed(seed, 10 + draw))?;
                let x = pool[0];
                let set = sample_candidate_set(&pool[1..], n, derive_seed(seed, 1000 + draw))?.addrs;
                if test_specific(&mut ms, &set, x, &spec.test) {
                    let results = algs
                        .iter()
                        .map(|&alg| {
                            let mut fork = ms.clone();
                            let o = match alg {
                                Algorithm::Baseline => baseline_reduce(&mut fork, &set, x, &spec.test),
                                Algorithm::GroupTesting => group_test_reduce(&mut fork, &set, x, &spec.test),
                            };
                            summarize(&o)
                        })
                        .collect::<Vec<_>>();
                    return Ok(Some(results));
                }
            }
            Ok(None)
        })?;
        let done: Vec<&Vec<_>> = per_trial.iter().flatten().collect();
        for (i, &alg) in algs.iter().enumerate() {
            let k = done.len().max(1) as f64;
            rows.push(ScalingRow {
                n,
                algorithm: alg,
                trials: done.len(),
                mean_accesses: done.iter().map(|r| r[i].2 as f64).sum::<f64>() / k,
                mean_tests: done.iter().map(|r| r[i].3 as f64).sum::<f64>() / k,
                success_rate: done.iter().filter(|r| r[i].0).count() as f64 / k,
            });
        }
    }
    let mut exponents = Vec::new();
    for &alg in algs {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.algorithm == alg && r.trials > 0)
            .map(|r| (r.n as f64, r.mean_accesses))
            .collect();
        if pts.len() < 3 {
            return Err(ExperimentError::FitRefused(format!("{alg:?}: fewer than 3 sizes produced eviction sets")));
        }
        let slope = log_log_slope(&pts)
            .ok_or_else(|| ExperimentError::FitRefused(format!("{alg:?}: degenerate access counts")))?;
        exponents.push((alg, slope));
    }
    Ok(ScalingReport { rows, exponents })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub n: u64,
    pub specific: f64,
    pub arbitrary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub n: u64,
    /// Expected search cost per adversary, in [`ModelReport::adversaries`] order.
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalRow {
    pub adversary: String,
    pub controlled_bits: u32,
    pub collision_prob: f64,
    pub baseline: u64,
    pub group_testing: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub adversaries: Vec<String>,
    pub probability: Vec<ProbabilityRow>,
    pub cost: Vec<CostRow>,
    pub optimal: Vec<OptimalRow>,
}

/// Model curves and optimal initial sizes for the configured geometry.
///
/// Probabilities use the configured adversary; costs and optimal sizes are
/// reported for the huge-page, 4 KB and limit adversaries.
pub fn run_model_report(spec: &ExperimentSpec) -> Result<ModelReport, ExperimentError> {
    let (cfg, adv) = spec.cache_and_adversary()?;
    let specific = EvictionModel::from_geometry(&adv, &cfg, EvictionMode::SpecificAddress);
    let a = cfg.assoc as u64;
    let mut ns: Vec<u64> = (1..=40).map(|i| i * 100).collect();
    ns.extend([456, 732, 888, 984, 1500, 2124, 3420]);
    ns.sort_unstable();
    ns.dedup();
    let probability = ns
        .iter()
        .map(|&n| ProbabilityRow {
            n,
            specific: prob_eviction_specific(n, specific.collision_prob, a),
            arbitrary: prob_eviction_any(n, specific.bins, a),
        })
        .collect();

    let named = [
        ("huge-page", AdversaryModel::huge_page(&cfg)),
        ("4kb", AdversaryModel::four_k(&cfg)),
        ("limit", AdversaryModel::limit(&cfg)),
    ];
    let models: Vec<EvictionModel> = named
        .iter()
        .map(|(_, m)| EvictionModel::from_geometry(m, &cfg, EvictionMode::SpecificAddress))
        .collect();
    let cost = (0..=48)
        .map(|i| {
            let n = (16.0 * 2f64.powf(i as f64 / 4.0)).round() as u64;
            CostRow { n, costs: models.iter().map(|m| expected_search_cost(n, m)).collect() }
        })
        .collect();
    let optimal = named
        .iter()
        .zip(&models)
        .map(|((name, adv), m)| OptimalRow {
            adversary: name.to_string(),
            controlled_bits: adv.controlled_bits,
            collision_prob: m.collision_prob,
            baseline: optimal_initial_size(m, Algorithm::Baseline),
            group_testing: optimal_initial_size(m, Algorithm::GroupTesting),
        })
        .collect();
    Ok(ModelReport { adversaries: named.iter().map(|(n, _)| n.to_string()).collect(), probability, cost, optimal })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindAllRow {
    pub pool_size: usize,
    pub trial: usize,
    pub sets_found: usize,
    /// Classes holding more than `a` pool members (oracle count).
    pub overflowing_classes: usize,
    /// Found sets that are minimal and congruent (oracle check).
    pub verified_sets: usize,
    /// Distinct classes among the found sets.
    pub distinct_classes: usize,
    pub accesses: u64,
    pub tests: u64,
}

/// Pool scans over every configured pool size.
pub fn run_find_all(spec: &ExperimentSpec) -> Result<Vec<FindAllRow>, ExperimentError> {
    let (cfg, adv) = spec.cache_and_adversary()?;
    if spec.find_all.pool_sizes.is_empty() || spec.find_all.pool_sizes.contains(&0) {
        return Err(ConfigError::Experiment("pool_sizes must be non-empty and positive".into()).into());
    }
    let mc = spec.machine.machine_config(adv.page_bits)?;
    let subset_size = match spec.find_all.subset_size {
        Some(s) => s,
        None => {
            let m = EvictionModel::from_geometry(&adv, &cfg, EvictionMode::ArbitraryAddress);
            optimal_initial_size(&m, Algorithm::GroupTesting) as usize
        }
    };
    let fa = FindAllConfig { subset_size, max_failures: spec.find_all.max_failures };
    let mut rows = Vec::new();
    for &size in &spec.find_all.pool_sizes {
        let base = derive_seed(spec.run.seed, size as u64);
        let per_trial = run_trials(spec.run.trials, base, |seed| {
            let mut ms = MachineState::new(mc.clone(), seed)?;
            let pool = build_pool(&mut ms, size, &adv, derive_seed(seed, 1))?;
            let pool = sample_candidate_set(&pool, size, derive_seed(seed, 2))?.addrs;
            let found = find_all_eviction_sets(&mut ms, &pool, &spec.test, &fa)?;
            let mut counts = std::collections::BTreeMap::new();
            for &y in &pool {
                *counts.entry(ms.location_of(y).class()).or_insert(0usize) += 1;
            }
            let overflowing_classes = counts.values().filter(|&&c| c > cfg.assoc).count();
            let verified_sets =
                found.sets.iter().filter(|s| s.len() == cfg.assoc && ms.all_congruent(s)).count();
            let mut classes: Vec<_> = found.sets.iter().map(|s| ms.location_of(s[0]).class()).collect();
            classes.sort_unstable();
            classes.dedup();
            Ok((found, overflowing_classes, verified_sets, classes.len()))
        })?;
        for (trial, (found, overflowing_classes, verified_sets, distinct_classes)) in per_trial.into_iter().enumerate() {
            rows.push(FindAllRow {
                pool_size: size,
                trial,
                sets_found: found.sets.len(),
                overflowing_classes,
                verified_sets,
                distinct_classes,
                accesses: found.accesses_used,
                tests: found.tests_used,
            });
        }
    }
    Ok(rows)
}
