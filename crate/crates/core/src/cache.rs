//! Sliced, set-associative last-level cache model.
//!
//! Physical addresses are split into a line offset (`line_bits`), a set index
//! (`set_bits`) and a tag. The slice is a hash of every bit above the line
//! offset. Each `(slice, set_index)` pair owns `assoc` lines managed by the
//! configured replacement policy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::{mix64, PhysAddr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplacementPolicyKind {
    Lru,
    Fifo,
    TreePlru,
    /// Bimodal insertion: new lines go to the LRU position except with
    /// probability `bip_epsilon`.
    Bip,
    /// Set dueling between LRU and BIP with a saturating selector.
    AdaptiveDueling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeaderMode {
    StaticLeaders,
    RandRuntimeLeaders,
}

/// Knobs for BIP and for the set-dueling policy.
///
/// The dueling mechanism of real parts is undocumented; this is an LRU/BIP
/// stand-in. Static leader `i` (per policy) sits in block `i` of `2^c / L`
/// consecutive sets: LRU leaders at offset `i`, BIP leaders at offset
/// `i + stride / 2`. Set 0 is therefore always an LRU leader, and leaders
/// are shared by all slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveParams {
    pub leader_mode: LeaderMode,
    pub leaders_per_policy: usize,
    pub psel_bits: u32,
    pub reselect_interval: u64,
    pub bip_epsilon: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            leader_mode: LeaderMode::StaticLeaders,
            leaders_per_policy: 16,
            psel_bits: 10,
            reselect_interval: 1_000_000,
            bip_epsilon: 1.0 / 32.0,
        }
    }
}

/// Function from line address to slice number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceHash {
    /// Seeded pseudorandom function of bits `[line_bits, phys_bits)`.
    Random { seed: u64 },
    /// Slice bit `i` is the parity of `pa & masks[i]` (bits below the line
    /// offset are ignored).
    XorFold { masks: Vec<u64> },
}

impl Default for SliceHash {
    fn default() -> Self {
        SliceHash::Random { seed: 0x5eed_511c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub assoc: usize,
    pub set_bits: u32,
    pub slice_bits: u32,
    pub line_bits: u32,
    pub phys_bits: u32,
    pub policy: ReplacementPolicyKind,
    #[serde(default)]
    pub adaptive: AdaptiveParams,
    #[serde(default)]
    pub slice_hash: SliceHash,
}

impl CacheConfig {
    /// Skylake-like geometry: 12 ways, 1024 sets per slice, 8 slices, 64-byte lines.
    pub fn skylake_like() -> Self {
        Self {
            assoc: 12,
            set_bits: 10,
            slice_bits: 3,
            line_bits: 6,
            phys_bits: 34,
            policy: ReplacementPolicyKind::Lru,
            adaptive: AdaptiveParams::default(),
            slice_hash: SliceHash::default(),
        }
    }

    /// Haswell-like geometry: 16 ways, 2048 sets per slice, 4 slices, 64-byte lines.
    pub fn haswell_like() -> Self {
        Self {
            assoc: 16,
            set_bits: 11,
            slice_bits: 2,
            line_bits: 6,
            ..Self::skylake_like()
        }
    }

    pub fn with_policy(mut self, policy: ReplacementPolicyKind) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let geo = |m: &str| Err(ConfigError::Geometry(m.to_string()));
        if self.assoc == 0 || self.assoc > 255 {
            return geo("assoc must be in 1..=255");
        }
        if self.set_bits == 0 || self.line_bits == 0 {
            return geo("set_bits and line_bits must be at least 1");
        }
        if self.phys_bits > 63 {
            return geo("phys_bits must be at most 63");
        }
        if self.line_bits + self.set_bits + self.slice_bits >= self.phys_bits {
            return geo("line, set and slice bits must leave room for a tag");
        }
        if self.set_bits + self.slice_bits > 24 {
            return geo("more than 2^24 cache sets");
        }
        if let SliceHash::XorFold { masks } = &self.slice_hash {
            if masks.len() != self.slice_bits as usize {
                return geo("xor-fold hash needs one mask per slice bit");
            }
        }
        let pol = |m: &str| Err(ConfigError::Policy(m.to_string()));
        let p = &self.adaptive;
        match self.policy {
            ReplacementPolicyKind::TreePlru => {
                if !self.assoc.is_power_of_two() || self.assoc > 64 {
                    return pol("tree-plru requires a power-of-two associativity up to 64");
                }
            }
            ReplacementPolicyKind::Bip => {
                if !(0.0..=1.0).contains(&p.bip_epsilon) {
                    return pol("bip_epsilon must be a probability");
                }
            }
            ReplacementPolicyKind::AdaptiveDueling => {
                if !(0.0..=1.0).contains(&p.bip_epsilon) {
                    return pol("bip_epsilon must be a probability");
                }
                if p.leaders_per_policy == 0 {
                    return pol("at least one leader set per policy");
                }
                if 2 * p.leaders_per_policy > (1usize << self.set_bits) {
                    return pol("2 * leaders_per_policy exceeds the number of sets per slice");
                }
                if p.psel_bits == 0 || p.psel_bits > 31 {
                    return pol("psel_bits must be in 1..=31");
                }
                if p.reselect_interval == 0 {
                    return pol("reselect_interval must be positive");
                }
            }
            ReplacementPolicyKind::Lru | ReplacementPolicyKind::Fifo => {}
        }
        Ok(())
    }

    pub fn sets_per_slice(&self) -> usize {
        1 << self.set_bits
    }

    pub fn num_slices(&self) -> usize {
        1 << self.slice_bits
    }

    pub fn num_sets(&self) -> usize {
        self.sets_per_slice() * self.num_slices()
    }

    pub fn total_lines(&self) -> usize {
        self.num_sets() * self.assoc
    }

    pub fn slice_of(&self, pa: PhysAddr) -> u32 {
        if self.slice_bits == 0 {
            return 0;
        }
        let line = pa.0 >> self.line_bits;
        match &self.slice_hash {
            SliceHash::Random { seed } => {
                (mix64(line ^ mix64(*seed)) & ((1u64 << self.slice_bits) - 1)) as u32
            }
            SliceHash::XorFold { masks } => {
                let line_mask = !((1u64 << self.line_bits) - 1);
                masks.iter().enumerate().fold(0u32, |acc, (i, m)| {
                    acc | (((pa.0 & m & line_mask).count_ones() & 1) << i)
                })
            }
        }
    }

    pub fn derive_location(&self, pa: PhysAddr) -> CacheLocation {
        debug_assert!(pa.0 >> self.phys_bits == 0, "{pa:?} exceeds phys_bits");
        CacheLocation {
            slice: self.slice_of(pa),
            set_index: ((pa.0 >> self.line_bits) & ((1u64 << self.set_bits) - 1)) as u32,
            tag: pa.0 >> (self.line_bits + self.set_bits),
        }
    }

    /// Ground-truth congruence: same set index and same slice.
    pub fn congruent(&self, a: PhysAddr, b: PhysAddr) -> bool {
        let (la, lb) = (self.derive_location(a), self.derive_location(b));
        la.set_index == lb.set_index && la.slice == lb.slice
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheLocation {
    pub slice: u32,
    pub set_index: u32,
    pub tag: u64,
}

impl CacheLocation {
    /// Congruence class key, `(slice, set_index)`.
    pub fn class(&self) -> (u32, u32) {
        (self.slice, self.set_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessResult {
    Hit,
    Miss { evicted_tag: Option<u64> },
}

impl AccessResult {
    pub fn is_hit(self) -> bool {
        matches!(self, AccessResult::Hit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetRole {
    Follower,
    LruLeader,
    BipLeader,
}

#[derive(Debug, Clone)]
struct Dueling {
    roles: Vec<SetRole>,
    psel: u32,
    psel_max: u32,
    since_reselect: u64,
}

/// Occupancy and replacement metadata of every cache set.
#[derive(Debug, Clone)]
pub struct CacheState {
    cfg: CacheConfig,
    /// `assoc` slots per set. Ordered policies keep MRU (or newest) first;
    /// tree-PLRU keeps tags at their way index.
    tags: Vec<u64>,
    fill: Vec<u8>,
    plru: Vec<u64>,
    dueling: Option<Dueling>,
    rng: ChaCha8Rng,
    accesses: u64,
}

const EMPTY: u64 = u64::MAX;

impl CacheState {
    pub fn new(cfg: CacheConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let sets = cfg.num_sets();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dueling = (cfg.policy == ReplacementPolicyKind::AdaptiveDueling).then(|| Dueling {
            roles: leader_roles(&cfg, &mut rng),
            psel: 0,
            psel_max: (1u32 << cfg.adaptive.psel_bits) - 1,
            since_reselect: 0,
        });
        Ok(Self {
            tags: vec![EMPTY; sets * cfg.assoc],
            fill: vec![0; sets],
            plru: if cfg.policy == ReplacementPolicyKind::TreePlru { vec![0; sets] } else { Vec::new() },
            dueling,
            rng,
            accesses: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    pub fn accesses(&self) -> u64 {
        self.accesses
    }

    /// Policy selector value, if the policy duels.
    pub fn psel(&self) -> Option<u32> {
        self.dueling.as_ref().map(|d| d.psel)
    }

    /// Role of a set index under the current leader assignment.
    pub fn set_role(&self, set_index: u32) -> SetRole {
        self.dueling
            .as_ref()
            .map_or(SetRole::Follower, |d| d.roles[set_index as usize])
    }

    /// Empties every set and zeroes counters. Static leaders are kept,
    /// rand-runtime leaders are drawn again.
    pub fn reset(&mut self) {
        self.tags.fill(EMPTY);
        self.fill.fill(0);
        self.plru.fill(0);
        self.accesses = 0;
        if let Some(d) = self.dueling.as_mut() {
            d.psel = 0;
            d.since_reselect = 0;
            if self.cfg.adaptive.leader_mode == LeaderMode::RandRuntimeLeaders {
                d.roles = leader_roles(&self.cfg, &mut self.rng);
            }
        }
    }

    fn flat_index(&self, loc: &CacheLocation) -> usize {
        ((loc.slice as usize) << self.cfg.set_bits) | loc.set_index as usize
    }

    /// Residency probe that leaves replacement state untouched.
    pub fn contains(&self, pa: PhysAddr) -> bool {
        let loc = self.cfg.derive_location(pa);
        let set = self.flat_index(&loc);
        let a = self.cfg.assoc;
        self.tags[set * a..(set + 1) * a].contains(&loc.tag)
    }

    /// Valid tags of the set `pa` maps to, in policy order.
    pub fn set_tags(&self, pa: PhysAddr) -> Vec<u64> {
        let loc = self.cfg.derive_location(pa);
        let set = self.flat_index(&loc);
        let a = self.cfg.assoc;
        self.tags[set * a..(set + 1) * a].iter().copied().filter(|&t| t != EMPTY).collect()
    }

    /// Number of valid lines in the set `pa` maps to.
    pub fn occupancy(&self, pa: PhysAddr) -> usize {
        let loc = self.cfg.derive_location(pa);
        let set = self.flat_index(&loc);
        let a = self.cfg.assoc;
        self.tags[set * a..(set + 1) * a].iter().filter(|&&t| t != EMPTY).count()
    }

    pub fn access(&mut self, pa: PhysAddr) -> AccessResult {
        self.accesses += 1;
        self.maybe_reselect();
        let loc = self.cfg.derive_location(pa);
        let set = self.flat_index(&loc);
        let a = self.cfg.assoc;
        let eps = self.cfg.adaptive.bip_epsilon;

        let (effective, role) = match self.cfg.policy {
            ReplacementPolicyKind::AdaptiveDueling => {
                let d = self.dueling.as_ref().expect("dueling state");
                let role = d.roles[loc.set_index as usize];
                let pol = match role {
                    SetRole::LruLeader => ReplacementPolicyKind::Lru,
                    SetRole::BipLeader => ReplacementPolicyKind::Bip,
                    SetRole::Follower if d.psel > d.psel_max / 2 => ReplacementPolicyKind::Bip,
                    SetRole::Follower => ReplacementPolicyKind::Lru,
                };
                (pol, role)
            }
            p => (p, SetRole::Follower),
        };

        let lines = &mut self.tags[set * a..(set + 1) * a];
        let n = self.fill[set] as usize;
        let result = match effective {
            ReplacementPolicyKind::TreePlru => {
                let bits = &mut self.plru[set];
                if let Some(way) = lines.iter().position(|&t| t == loc.tag) {
                    plru_touch(bits, way, a);
                    AccessResult::Hit
                } else {
                    let way = lines.iter().position(|&t| t == EMPTY).unwrap_or_else(|| plru_victim(*bits, a));
                    let old = lines[way];
                    lines[way] = loc.tag;
                    plru_touch(bits, way, a);
                    if old == EMPTY {
                        self.fill[set] += 1;
                    }
                    AccessResult::Miss { evicted_tag: (old != EMPTY).then_some(old) }
                }
            }
            ReplacementPolicyKind::Lru | ReplacementPolicyKind::Fifo | ReplacementPolicyKind::Bip => {
                if let Some(i) = lines[..n].iter().position(|&t| t == loc.tag) {
                    if effective != ReplacementPolicyKind::Fifo {
                        lines[..=i].rotate_right(1);
                    }
                    AccessResult::Hit
                } else {
                    let full = n == a;
                    let pos = if full { a - 1 } else { n };
                    let evicted_tag = full.then(|| lines[a - 1]);
                    lines[pos] = loc.tag;
                    let at_mru = effective != ReplacementPolicyKind::Bip || self.rng.random::<f64>() < eps;
                    if at_mru {
                        lines[..=pos].rotate_right(1);
                    }
                    if !full {
                        self.fill[set] += 1;
                    }
                    AccessResult::Miss { evicted_tag }
                }
            }
            ReplacementPolicyKind::AdaptiveDueling => unreachable!("resolved above"),
        };

        if let (Some(d), AccessResult::Miss { .. }) = (self.dueling.as_mut(), result) {
            match role {
                SetRole::LruLeader => d.psel = (d.psel + 1).min(d.psel_max),
                SetRole::BipLeader => d.psel = d.psel.saturating_sub(1),
                SetRole::Follower => {}
            }
        }
        result
    }

    fn maybe_reselect(&mut self) {
        if self.cfg.adaptive.leader_mode != LeaderMode::RandRuntimeLeaders {
            return;
        }
        if let Some(d) = self.dueling.as_mut() {
            d.since_reselect += 1;
            if d.since_reselect >= self.cfg.adaptive.reselect_interval {
                d.since_reselect = 0;
                d.roles = leader_roles(&self.cfg, &mut self.rng);
            }
        }
    }
}

fn leader_roles(cfg: &CacheConfig, rng: &mut ChaCha8Rng) -> Vec<SetRole> {
    let sets = cfg.sets_per_slice();
    let leaders = cfg.adaptive.leaders_per_policy;
    let mut roles = vec![SetRole::Follower; sets];
    match cfg.adaptive.leader_mode {
        LeaderMode::StaticLeaders => {
            let stride = sets / leaders;
            for i in 0..leaders {
                roles[i * stride + i % stride] = SetRole::LruLeader;
                roles[i * stride + (i + stride / 2) % stride] = SetRole::BipLeader;
            }
        }
        LeaderMode::RandRuntimeLeaders => {
            let picked = rand::seq::index::sample(rng, sets, 2 * leaders);
            for (k, idx) in picked.into_iter().enumerate() {
                roles[idx] = if k < leaders { SetRole::LruLeader } else { SetRole::BipLeader };
            }
        }
    }
    roles
}

/// Points every node on the path to `way` away from it.
fn plru_touch(bits: &mut u64, way: usize, assoc: usize) {
    let (mut node, mut lo, mut hi) = (1usize, 0usize, assoc);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if way < mid {
            *bits |= 1 << node;
            node *= 2;
            hi = mid;
        } else {
            *bits &= !(1 << node);
            node = 2 * node + 1;
            lo = mid;
        }
    }
}

fn plru_victim(bits: u64, assoc: usize) -> usize {
    let (mut node, mut lo, mut hi) = (1usize, 0usize, assoc);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bits & (1 << node) != 0 {
            node = 2 * node + 1;
            lo = mid;
        } else {
            node *= 2;
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(policy: ReplacementPolicyKind, assoc: usize) -> CacheConfig {
        CacheConfig {
            assoc,
            set_bits: 10,
            slice_bits: 0,
            line_bits: 6,
            phys_bits: 34,
            policy,
            adaptive: AdaptiveParams::default(),
            slice_hash: SliceHash::default(),
        }
    }

    /// Distinct addresses in set 0 of slice 0 (no slices configured).
    fn same_set(i: u64) -> PhysAddr {
        PhysAddr(i << 16)
    }

    #[test]
    fn location_of_zero_and_bit_extraction() {
        let cfg = small(ReplacementPolicyKind::Lru, 12);
        let l = cfg.derive_location(PhysAddr(0));
        assert_eq!((l.slice, l.set_index, l.tag), (0, 0, 0));
        assert_eq!(cfg.derive_location(PhysAddr(0x1040)).set_index, 65);
        assert_eq!(cfg.derive_location(PhysAddr(0x1_0000)).tag, 1);
    }

    #[test]
    fn slice_hash_is_deterministic_and_in_range() {
        let cfg = CacheConfig::skylake_like();
        for pa in [0x1234_5678u64, 0x3_ffff_ffc0, 0x40] {
            let a = cfg.slice_of(PhysAddr(pa));
            assert_eq!(a, cfg.slice_of(PhysAddr(pa)));
            assert!(a < 8);
        }
        // line offset bits do not matter
        assert_eq!(cfg.slice_of(PhysAddr(0x1234_5640)), cfg.slice_of(PhysAddr(0x1234_567f)));
    }

    #[test]
    fn xor_fold_hash_uses_masks() {
        let mut cfg = CacheConfig::skylake_like();
        cfg.slice_bits = 1;
        cfg.slice_hash = SliceHash::XorFold { masks: vec![1 << 20 | 1 << 21] };
        assert_eq!(cfg.slice_of(PhysAddr(0)), 0);
        assert_eq!(cfg.slice_of(PhysAddr(1 << 20)), 1);
        assert_eq!(cfg.slice_of(PhysAddr(3 << 20)), 0);
        let mut bad = cfg.clone();
        bad.slice_bits = 2;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn congruence_examples() {
        let cfg = small(ReplacementPolicyKind::Lru, 12);
        let pa = PhysAddr(0x1040);
        assert!(cfg.congruent(pa, pa));
        assert!(cfg.congruent(pa, PhysAddr(0x1040 | 1 << 20)));
        assert!(!cfg.congruent(pa, PhysAddr(0x1040 ^ 1 << 6)));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(small(ReplacementPolicyKind::TreePlru, 12).validate().is_err());
        assert!(small(ReplacementPolicyKind::TreePlru, 16).validate().is_ok());
        assert!(small(ReplacementPolicyKind::Lru, 0).validate().is_err());
        let mut c = small(ReplacementPolicyKind::AdaptiveDueling, 12);
        c.adaptive.leaders_per_policy = 600;
        assert!(c.validate().is_err());
        let mut c = small(ReplacementPolicyKind::Lru, 12);
        c.set_bits = 0;
        assert!(c.validate().is_err());
        assert_eq!(CacheConfig::skylake_like().total_lines(), 8192 * 12);
    }

    #[test]
    fn lru_evicts_oldest() {
        let mut c = CacheState::new(small(ReplacementPolicyKind::Lru, 2), 1).unwrap();
        let (a, b, x) = (same_set(1), same_set(2), same_set(3));
        assert!(!c.access(a).is_hit());
        assert!(!c.access(b).is_hit());
        assert_eq!(c.access(x), AccessResult::Miss { evicted_tag: Some(a.0 >> 16) });
        assert!(!c.contains(a));
    }

    #[test]
    fn fifo_ignores_hits() {
        let mut c = CacheState::new(small(ReplacementPolicyKind::Fifo, 2), 1).unwrap();
        let (a, b, x) = (same_set(1), same_set(2), same_set(3));
        c.access(a);
        c.access(b);
        assert!(c.access(a).is_hit());
        assert_eq!(c.access(x), AccessResult::Miss { evicted_tag: Some(1) });
        assert!(c.contains(b));
    }

    #[test]
    fn lru_full_sweep_evicts_previous_content() {
        let mut c = CacheState::new(small(ReplacementPolicyKind::Lru, 12), 1).unwrap();
        let x = same_set(100);
        c.access(x);
        for i in 0..12 {
            c.access(same_set(i));
        }
        assert!(!c.access(x).is_hit());
    }

    #[test]
    fn plru_cycles_through_all_ways() {
        let mut c = CacheState::new(small(ReplacementPolicyKind::TreePlru, 8), 1).unwrap();
        let x = same_set(100);
        c.access(x);
        for i in 0..7 {
            c.access(same_set(i));
            assert!(c.contains(x), "evicted after {} misses", i + 1);
        }
        c.access(same_set(7));
        assert!(!c.contains(x));
    }

    #[test]
    fn bip_inserts_at_lru_position() {
        let mut cfg = small(ReplacementPolicyKind::Bip, 4);
        cfg.adaptive.bip_epsilon = 0.0;
        let mut c = CacheState::new(cfg, 1).unwrap();
        let x = same_set(100);
        c.access(x);
        assert!(c.access(x).is_hit());
        for i in 0..50 {
            c.access(same_set(i));
        }
        // thrash-resistant: the promoted line survives
        assert!(c.contains(x));
    }

    #[test]
    fn reset_empties_cache() {
        let mut c = CacheState::new(CacheConfig::skylake_like(), 3).unwrap();
        let a = PhysAddr(0x1234_0000);
        c.access(a);
        assert!(c.access(a).is_hit());
        c.reset();
        assert_eq!(c.accesses(), 0);
        assert!(!c.access(a).is_hit());
        c.reset();
        assert!(!c.access(a).is_hit());
        assert_eq!(c.config().assoc, 12);
    }

    #[test]
    fn static_leaders_layout() {
        let cfg = CacheConfig::skylake_like().with_policy(ReplacementPolicyKind::AdaptiveDueling);
        let c = CacheState::new(cfg, 0).unwrap();
        assert_eq!(c.set_role(0), SetRole::LruLeader);
        assert_eq!(c.set_role(65), SetRole::LruLeader);
        assert_eq!(c.set_role(32), SetRole::BipLeader);
        let lru = (0..1024).filter(|&s| c.set_role(s) == SetRole::LruLeader).count();
        let bip = (0..1024).filter(|&s| c.set_role(s) == SetRole::BipLeader).count();
        assert_eq!((lru, bip), (16, 16));
    }

    #[test]
    fn psel_tracks_leader_misses() {
        let cfg = small(ReplacementPolicyKind::AdaptiveDueling, 4);
        let mut c = CacheState::new(cfg, 0).unwrap();
        for i in 0..20 {
            c.access(same_set(i)); // set 0 is an LRU leader
        }
        assert_eq!(c.psel(), Some(20));
        let bip_leader = (0..1024u64).find(|&s| c.set_role(s as u32) == SetRole::BipLeader).unwrap();
        for i in 0..5 {
            c.access(PhysAddr(i << 16 | bip_leader << 6));
        }
        assert_eq!(c.psel(), Some(15));
    }

    #[test]
    fn rand_runtime_leaders_reroll() {
        let mut cfg = CacheConfig::skylake_like().with_policy(ReplacementPolicyKind::AdaptiveDueling);
        cfg.adaptive.leader_mode = LeaderMode::RandRuntimeLeaders;
        cfg.adaptive.reselect_interval = 10;
        let mut c = CacheState::new(cfg, 9).unwrap();
        let before: Vec<_> = (0..1024).map(|s| c.set_role(s)).collect();
        for i in 0..10 {
            c.access(PhysAddr(i << 6));
        }
        let after: Vec<_> = (0..1024).map(|s| c.set_role(s)).collect();
        assert_ne!(before, after);
        assert_eq!(after.iter().filter(|r| **r == SetRole::LruLeader).count(), 16);
    }
}
