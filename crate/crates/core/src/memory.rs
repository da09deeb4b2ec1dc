//! Virtual memory in front of the cache: page-table translation, a
//! single-level TLB whose misses trigger page walks through the cache, and
//! construction of candidate address pools for a given adversary.

use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cache::{CacheConfig, CacheLocation, CacheState};
use crate::error::ConfigError;
use crate::{mix64, PhysAddr, VirtAddr};

#[derive(Default)]
struct MixHasher(u64);

impl Hasher for MixHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = mix64(self.0 ^ u64::from(*b));
        }
    }
    fn write_u64(&mut self, n: u64) {
        self.0 = mix64(self.0 ^ n);
    }
}

type FastMap<K, V> = HashMap<K, V, BuildHasherDefault<MixHasher>>;
type FastSet<K> = HashSet<K, BuildHasherDefault<MixHasher>>;

/// How much of the set index an attacker controls through page offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryModel {
    pub page_bits: u32,
    /// γ: set-index bits fixed by the page offset.
    pub controlled_bits: u32,
    /// Value of the low `controlled_bits + line_bits` address bits.
    pub fixed_offset: u64,
}

impl AdversaryModel {
    /// 2 MB pages: every set-index bit is controlled.
    pub fn huge_page(cfg: &CacheConfig) -> Self {
        Self::with_page_bits(21, cfg)
    }

    /// 4 KB pages: γ = 12 − ℓ.
    pub fn four_k(cfg: &CacheConfig) -> Self {
        Self::with_page_bits(12, cfg)
    }

    /// No control at all: each line is translated on its own.
    pub fn limit(cfg: &CacheConfig) -> Self {
        Self { page_bits: cfg.line_bits, controlled_bits: 0, fixed_offset: 0 }
    }

    fn with_page_bits(page_bits: u32, cfg: &CacheConfig) -> Self {
        Self {
            page_bits,
            controlled_bits: page_bits.saturating_sub(cfg.line_bits).min(cfg.set_bits),
            fixed_offset: 0,
        }
    }

    pub fn stride(&self, cfg: &CacheConfig) -> u64 {
        1u64 << (self.controlled_bits + cfg.line_bits)
    }

    pub fn validate(&self, cfg: &CacheConfig) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::Adversary(m));
        if self.page_bits < cfg.line_bits || self.page_bits > 30 {
            return err(format!("page_bits {} outside [line_bits, 30]", self.page_bits));
        }
        if self.controlled_bits > cfg.set_bits {
            return err(format!("γ = {} exceeds set_bits {}", self.controlled_bits, cfg.set_bits));
        }
        if self.controlled_bits + cfg.line_bits > self.page_bits {
            return err(format!("γ = {} not reachable with {}-bit pages", self.controlled_bits, self.page_bits));
        }
        if self.fixed_offset >= self.stride(cfg) {
            return err("fixed_offset wider than the controlled bits".into());
        }
        Ok(())
    }
}

/// Restricts physical frames to those with `pfn & mask == value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneMask {
    pub mask: u64,
    pub value: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlbConfig {
    pub entries: usize,
    pub ways: usize,
}

impl TlbConfig {
    /// Skylake second-level TLB: 1536 entries, 4-way.
    pub fn skylake() -> Self {
        Self { entries: 1536, ways: 4 }
    }

    /// Haswell second-level TLB: 1024 entries, 8-way.
    pub fn haswell() -> Self {
        Self { entries: 1024, ways: 8 }
    }
}

/// Abstract latency units reported by [`MachineState::access`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyModel {
    pub hit: f64,
    pub miss: f64,
    pub tlb_penalty: f64,
    pub jitter_sigma: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self { hit: 1.0, miss: 30.0, tlb_penalty: 20.0, jitter_sigma: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub cache: CacheConfig,
    pub page_bits: u32,
    pub virt_bits: u32,
    pub tlb: Option<TlbConfig>,
    pub latency: LatencyModel,
    pub zone: Option<ZoneMask>,
}

impl MachineConfig {
    pub fn new(cache: CacheConfig, page_bits: u32) -> Self {
        Self { cache, page_bits, virt_bits: 48, tlb: None, latency: LatencyModel::default(), zone: None }
    }

    pub fn with_tlb(mut self, tlb: TlbConfig) -> Self {
        self.tlb = Some(tlb);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.cache.validate()?;
        if self.page_bits < self.cache.line_bits || self.page_bits >= self.cache.phys_bits {
            return Err(ConfigError::Geometry(format!("page_bits {} out of range", self.page_bits)));
        }
        if self.virt_bits > 57 || self.virt_bits <= self.page_bits {
            return Err(ConfigError::Geometry(format!("virt_bits {} out of range", self.virt_bits)));
        }
        if let Some(t) = self.tlb {
            if t.ways == 0 || t.entries == 0 || t.entries % t.ways != 0 || t.ways > 255 {
                return Err(ConfigError::Geometry("TLB entries must be a positive multiple of ways".into()));
            }
        }
        if self.latency.jitter_sigma.is_nan() || self.latency.jitter_sigma < 0.0 {
            return Err(ConfigError::Geometry("jitter_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Lazily populated, injective VPN → PFN map that is the identity on the page offset.
#[derive(Debug, Clone)]
pub struct TranslationMap {
    page_bits: u32,
    frame_bits: u32,
    zone: Option<ZoneMask>,
    map: FastMap<u64, u64>,
    used: FastSet<u64>,
    rng: ChaCha8Rng,
}

impl TranslationMap {
    fn new(page_bits: u32, phys_bits: u32, zone: Option<ZoneMask>, seed: u64) -> Self {
        Self {
            page_bits,
            frame_bits: phys_bits - page_bits,
            zone,
            map: FastMap::default(),
            used: FastSet::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn available_frames(&self) -> u64 {
        let free_bits = match self.zone {
            Some(z) => self.frame_bits - (z.mask & ((1u64 << self.frame_bits) - 1)).count_ones(),
            None => self.frame_bits,
        };
        1u64 << free_bits
    }

    pub fn translate(&mut self, va: VirtAddr) -> Result<PhysAddr, ConfigError> {
        let vpn = va.0 >> self.page_bits;
        let offset = va.0 & ((1u64 << self.page_bits) - 1);
        let pfn = match self.map.get(&vpn) {
            Some(&pfn) => pfn,
            None => {
                if self.used.len() as u64 >= self.available_frames() {
                    return Err(ConfigError::AddressSpaceExhausted(format!(
                        "all {} frames are mapped",
                        self.available_frames()
                    )));
                }
                let frame_mask = (1u64 << self.frame_bits) - 1;
                let pfn = loop {
                    let mut cand = self.rng.random::<u64>() & frame_mask;
                    if let Some(z) = self.zone {
                        cand = (cand & !z.mask) | (z.value & z.mask & frame_mask);
                    }
                    if self.used.insert(cand) {
                        break cand;
                    }
                };
                self.map.insert(vpn, pfn);
                pfn
            }
        };
        Ok(PhysAddr(pfn << self.page_bits | offset))
    }

    pub fn mapped_pages(&self) -> usize {
        self.map.len()
    }
}

/// Set-associative LRU TLB keyed by virtual page number.
#[derive(Debug, Clone)]
struct Tlb {
    sets: usize,
    ways: usize,
    slots: Vec<u64>,
    fill: Vec<u8>,
}

impl Tlb {
    fn new(cfg: TlbConfig) -> Self {
        let sets = cfg.entries / cfg.ways;
        Self { sets, ways: cfg.ways, slots: vec![0; cfg.entries], fill: vec![0; sets] }
    }

    /// Looks `vpn` up, installing it on a miss. Returns whether it hit.
    fn lookup(&mut self, vpn: u64) -> bool {
        let set = (vpn % self.sets as u64) as usize;
        let lines = &mut self.slots[set * self.ways..(set + 1) * self.ways];
        let n = self.fill[set] as usize;
        if let Some(i) = lines[..n].iter().position(|&v| v == vpn) {
            lines[..=i].rotate_right(1);
            return true;
        }
        let pos = if n == self.ways { n - 1 } else { n };
        lines[pos] = vpn;
        lines[..=pos].rotate_right(1);
        if n < self.ways {
            self.fill[set] += 1;
        }
        false
    }

    fn len(&self) -> usize {
        self.fill.iter().map(|&f| f as usize).sum()
    }

    fn clear(&mut self) {
        self.fill.fill(0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lookup {
    Hit,
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessOutcome {
    pub llc: Lookup,
    /// `None` when the machine has no TLB.
    pub tlb: Option<Lookup>,
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Explicit accesses issued through [`MachineState::access`].
    pub mem_accesses: u64,
    pub tlb_misses: u64,
    /// Implicit cache accesses made by page walks.
    pub page_walk_accesses: u64,
    pub test_invocations: u64,
}

/// Cache, page table, TLB and counters of one simulated machine.
///
/// Instances are independent and `Send`; clone one to fork a machine.
#[derive(Debug, Clone)]
pub struct MachineState {
    cfg: MachineConfig,
    cache: CacheState,
    tmap: TranslationMap,
    tlb: Option<Tlb>,
    counters: Counters,
    pt_seed: u64,
    rng: ChaCha8Rng,
    jitter: Option<Normal<f64>>,
    regions: Vec<(u64, u64)>,
}

impl MachineState {
    pub fn new(cfg: MachineConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let cache = CacheState::new(cfg.cache.clone(), mix64(seed ^ 0xca))?;
        let tmap = TranslationMap::new(cfg.page_bits, cfg.cache.phys_bits, cfg.zone, mix64(seed ^ 0x7a));
        let jitter = (cfg.latency.jitter_sigma > 0.0)
            .then(|| Normal::new(0.0, cfg.latency.jitter_sigma).expect("validated sigma"));
        Ok(Self {
            tlb: cfg.tlb.map(Tlb::new),
            cache,
            tmap,
            counters: Counters::default(),
            pt_seed: mix64(seed ^ 0x9a9e),
            rng: ChaCha8Rng::seed_from_u64(mix64(seed ^ 0x1e)),
            jitter,
            regions: Vec::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &MachineConfig {
        &self.cfg
    }

    pub fn cache_config(&self) -> &CacheConfig {
        &self.cfg.cache
    }

    pub fn assoc(&self) -> usize {
        self.cfg.cache.assoc
    }

    pub fn cache(&self) -> &CacheState {
        &self.cache
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub(crate) fn counters_mut(&mut self) -> &mut Counters {
        &mut self.counters
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn tlb_len(&self) -> Option<usize> {
        self.tlb.as_ref().map(Tlb::len)
    }

    /// Page-table translation. Stable across calls.
    pub fn translate(&mut self, va: VirtAddr) -> Result<PhysAddr, ConfigError> {
        self.tmap.translate(va)
    }

    fn walk_levels(&self) -> u32 {
        match self.cfg.page_bits {
            30.. => 2,
            21.. => 3,
            _ => 4,
        }
    }

    /// Physical addresses of the page-table entries visited when walking `va`.
    pub fn walk_addresses(&self, va: VirtAddr) -> Vec<PhysAddr> {
        let levels = self.walk_levels();
        let table_frames = 1u64 << (self.cfg.cache.phys_bits - 12);
        (0..levels)
            .map(|level| {
                let shift = self.cfg.page_bits + 9 * (levels - 1 - level);
                let index = (va.0 >> shift) & 511;
                let prefix = va.0 >> (shift + 9);
                let frame = mix64(self.pt_seed ^ mix64(u64::from(level) << 56 ^ prefix)) % table_frames;
                PhysAddr(frame << 12 | index << 3)
            })
            .collect()
    }

    /// One load from the attacker's point of view.
    ///
    /// # Panics
    /// If the physical address space runs out of free frames.
    pub fn access(&mut self, va: VirtAddr) -> AccessOutcome {
        self.counters.mem_accesses += 1;
        let tlb = match self.tlb.as_mut() {
            None => None,
            Some(t) => {
                if t.lookup(va.0 >> self.cfg.page_bits) {
                    Some(Lookup::Hit)
                } else {
                    self.counters.tlb_misses += 1;
                    for pte in self.walk_addresses(va) {
                        self.counters.page_walk_accesses += 1;
                        self.cache.access(pte);
                    }
                    Some(Lookup::Miss)
                }
            }
        };
        let pa = self.tmap.translate(va).expect("physical address space exhausted");
        let llc = if self.cache.access(pa).is_hit() { Lookup::Hit } else { Lookup::Miss };
        let lat = &self.cfg.latency;
        let mut latency = if llc == Lookup::Hit { lat.hit } else { lat.miss };
        if tlb == Some(Lookup::Miss) {
            latency += lat.tlb_penalty;
        }
        if let Some(n) = self.jitter {
            latency += n.sample(&mut self.rng);
        }
        AccessOutcome { llc, tlb, latency }
    }

    /// Cold cache and TLB. Counters and mappings survive.
    pub fn flush(&mut self) {
        self.cache.reset();
        if let Some(t) = self.tlb.as_mut() {
            t.clear();
        }
    }

    /// Reserves a fresh, non-overlapping virtual region of `len` bytes aligned to `align`.
    pub(crate) fn reserve_region(&mut self, len: u64, align: u64, seed: u64) -> Result<u64, ConfigError> {
        let top = 1u64 << self.cfg.virt_bits;
        let floor = 1u64 << 32;
        if len == 0 || len > (top - floor) / 4 {
            return Err(ConfigError::Adversary(format!("pool of {len} bytes does not fit in virtual space")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let start = rng.random_range(floor..top - len) & !(align - 1);
            let end = start + len;
            if start >= floor && self.regions.iter().all(|&(s, e)| end <= s || start >= e) {
                self.regions.push((start, end));
                return Ok(start);
            }
        }
        Err(ConfigError::Adversary("could not place a non-overlapping pool".into()))
    }

    // ---- ground-truth oracle, never used by attacker-facing code ----

    pub fn location_of(&mut self, va: VirtAddr) -> CacheLocation {
        let pa = self.translate(va).expect("physical address space exhausted");
        self.cfg.cache.derive_location(pa)
    }

    pub fn congruent(&mut self, a: VirtAddr, b: VirtAddr) -> bool {
        self.location_of(a).class() == self.location_of(b).class()
    }

    /// `|[x] ∩ set|`.
    pub fn count_congruent(&mut self, set: &[VirtAddr], x: VirtAddr) -> usize {
        let class = self.location_of(x).class();
        set.iter().filter(|&&y| self.location_of(y).class() == class).count()
    }

    /// Size of the largest congruence class inside `set`.
    pub fn max_class_size(&mut self, set: &[VirtAddr]) -> usize {
        let mut counts: FastMap<(u32, u32), usize> = FastMap::default();
        for &y in set {
            *counts.entry(self.location_of(y).class()).or_default() += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }

    pub fn is_eviction_set_for(&mut self, set: &[VirtAddr], x: VirtAddr) -> bool {
        !set.contains(&x) && self.count_congruent(set, x) >= self.assoc()
    }

    pub fn is_eviction_set_any(&mut self, set: &[VirtAddr]) -> bool {
        self.max_class_size(set) > self.assoc()
    }

    /// True when every member of `set` falls in one class.
    pub fn all_congruent(&mut self, set: &[VirtAddr]) -> bool {
        match set.split_first() {
            None => true,
            Some((&first, rest)) => {
                let class = self.location_of(first).class();
                rest.iter().all(|&y| self.location_of(y).class() == class)
            }
        }
    }

    pub fn is_resident(&mut self, va: VirtAddr) -> bool {
        let pa = self.translate(va).expect("physical address space exhausted");
        self.cache.contains(pa)
    }
}

/// Ordered candidate addresses that share the attacker-controlled low bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub addrs: Vec<VirtAddr>,
    pub stride: u64,
    pub seed: u64,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.addrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addrs.is_empty()
    }
}

/// `count` addresses spaced `2^(γ+ℓ)` apart in a fresh buffer, all carrying
/// `adversary.fixed_offset` in their low `γ + ℓ` bits.
pub fn build_pool(
    ms: &mut MachineState,
    count: usize,
    adversary: &AdversaryModel,
    seed: u64,
) -> Result<Vec<VirtAddr>, ConfigError> {
    adversary.validate(ms.cache_config())?;
    if adversary.page_bits != ms.config().page_bits {
        return Err(ConfigError::Adversary(format!(
            "adversary uses {}-bit pages, machine maps {}-bit pages",
            adversary.page_bits,
            ms.config().page_bits
        )));
    }
    let stride = adversary.stride(ms.cache_config());
    let align = stride.max(1u64 << adversary.page_bits);
    let len = (count as u64).max(1) * stride;
    let base = ms.reserve_region(len.next_multiple_of(align), align, seed)?;
    Ok((0..count as u64).map(|j| VirtAddr(base + adversary.fixed_offset + j * stride)).collect())
}

/// Uniform sample of `n` pool members without replacement, in random order.
pub fn sample_candidate_set(pool: &[VirtAddr], n: usize, seed: u64) -> Result<CandidateSet, ConfigError> {
    if n > pool.len() {
        return Err(ConfigError::PoolTooSmall { requested: n, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut addrs: Vec<VirtAddr> = rand::seq::index::sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    addrs.shuffle(&mut rng);
    let stride = match pool {
        [a, b, ..] => b.0.abs_diff(a.0),
        _ => 0,
    };
    Ok(CandidateSet { addrs, stride, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(page_bits: u32, tlb: bool) -> MachineState {
        let mut cfg = MachineConfig::new(CacheConfig::skylake_like(), page_bits);
        if tlb {
            cfg = cfg.with_tlb(TlbConfig::skylake());
        }
        MachineState::new(cfg, 11).unwrap()
    }

    #[test]
    fn translation_is_stable_and_keeps_page_offset() {
        let mut ms = machine(12, false);
        let va = VirtAddr(0x7f12_3456_789a);
        let pa = ms.translate(va).unwrap();
        assert_eq!(pa, ms.translate(va).unwrap());
        assert_eq!(pa.0 & 0xfff, va.0 & 0xfff);
        let same_page = ms.translate(VirtAddr(va.0 ^ 0x10)).unwrap();
        assert_eq!(same_page.0 >> 12, pa.0 >> 12);
        assert!(pa.0 < 1 << 34);
    }

    #[test]
    fn translation_is_injective() {
        let mut ms = machine(12, false);
        let mut pfns = HashSet::new();
        for i in 0..5000u64 {
            let pa = ms.translate(VirtAddr(i << 12)).unwrap();
            assert!(pfns.insert(pa.0 >> 12));
        }
    }

    #[test]
    fn exhaustion_is_reported() {
        let mut cache = CacheConfig::skylake_like();
        cache.phys_bits = 21;
        let cfg = MachineConfig { cache, ..MachineConfig::new(CacheConfig::skylake_like(), 18) };
        let mut ms = MachineState::new(cfg, 1).unwrap();
        for i in 0..8u64 {
            ms.translate(VirtAddr(i << 18)).unwrap();
        }
        assert!(matches!(ms.translate(VirtAddr(8 << 18)), Err(ConfigError::AddressSpaceExhausted(_))));
    }

    #[test]
    fn zone_mask_pins_high_frame_bits() {
        let mut cfg = MachineConfig::new(CacheConfig::skylake_like(), 21);
        cfg.zone = Some(ZoneMask { mask: 0b1100_0000_0000, value: 0b0100_0000_0000 });
        let mut ms = MachineState::new(cfg, 2).unwrap();
        for i in 0..50u64 {
            let pfn = ms.translate(VirtAddr(i << 21)).unwrap().0 >> 21;
            assert_eq!(pfn & 0b1100_0000_0000, 0b0100_0000_0000);
        }
    }

    #[test]
    fn tlb_disabled_collapses_to_cache_access() {
        let mut ms = machine(12, false);
        let mut reference = CacheState::new(CacheConfig::skylake_like(), mix64(11 ^ 0xca)).unwrap();
        for i in 0..200u64 {
            let va = VirtAddr((i % 37) << 12 | 0x40);
            let pa = ms.translate(va).unwrap();
            let out = ms.access(va);
            assert_eq!(out.llc == Lookup::Hit, reference.access(pa).is_hit());
            assert_eq!(out.tlb, None);
        }
        assert_eq!(ms.counters().mem_accesses, 200);
        assert_eq!(ms.counters().page_walk_accesses, 0);
    }

    #[test]
    fn page_walk_on_tlb_miss_only() {
        let mut ms = machine(12, true);
        let va = VirtAddr(0x5555_0000_0040);
        let out = ms.access(va);
        assert_eq!(out.tlb, Some(Lookup::Miss));
        assert_eq!(ms.counters().page_walk_accesses, 4);
        assert_eq!(out.latency, 30.0 + 20.0);
        let again = ms.access(VirtAddr(va.0 + 8));
        assert_eq!(again.tlb, Some(Lookup::Hit));
        assert_eq!(again.latency, 1.0);
        assert_eq!(ms.counters().page_walk_accesses, 4);
        assert_eq!(ms.counters().tlb_misses, 1);
    }

    #[test]
    fn tlb_capacity_bounded() {
        let mut ms = machine(12, true);
        for i in 0..5000u64 {
            ms.access(VirtAddr((1 << 36) + (i << 12)));
        }
        assert_eq!(ms.tlb_len(), Some(1536));
        let c = ms.counters();
        assert_eq!(c.page_walk_accesses, 4 * c.tlb_misses);
    }

    #[test]
    fn walk_levels_follow_page_size() {
        assert_eq!(machine(12, false).walk_addresses(VirtAddr(0x1234_5000)).len(), 4);
        assert_eq!(machine(21, false).walk_addresses(VirtAddr(0x1234_5000)).len(), 3);
        let ms = machine(12, false);
        // neighbouring pages share the upper levels
        let a = ms.walk_addresses(VirtAddr(0x4000_0000));
        let b = ms.walk_addresses(VirtAddr(0x4000_1000));
        assert_eq!(a[..3], b[..3]);
        assert_eq!(b[3].0 - a[3].0, 8);
    }

    #[test]
    fn pool_strides_follow_adversary() {
        let cfg = CacheConfig::skylake_like();
        let mut ms = machine(12, false);
        let adv = AdversaryModel::four_k(&cfg);
        assert_eq!(adv.controlled_bits, 6);
        let pool = build_pool(&mut ms, 100, &adv, 5).unwrap();
        for w in pool.windows(2) {
            assert_eq!((w[1].0 - w[0].0) % 4096, 0);
        }
        let mut ms = machine(6, false);
        let lim = AdversaryModel::limit(&cfg);
        let pool = build_pool(&mut ms, 10, &lim, 5).unwrap();
        assert_eq!(pool[1].0 - pool[0].0, 64);
        let hp = AdversaryModel::huge_page(&cfg);
        assert_eq!((hp.controlled_bits, hp.stride(&cfg)), (10, 1 << 16));
    }

    #[test]
    fn pools_do_not_overlap() {
        let cfg = CacheConfig::skylake_like();
        let mut ms = machine(12, false);
        let adv = AdversaryModel::four_k(&cfg);
        let a = build_pool(&mut ms, 1000, &adv, 1).unwrap();
        let b = build_pool(&mut ms, 1000, &adv, 1).unwrap();
        let sa: HashSet<_> = a.iter().collect();
        assert!(b.iter().all(|v| !sa.contains(v)));
    }

    #[test]
    fn adversary_validation() {
        let cfg = CacheConfig::skylake_like();
        let bad = AdversaryModel { page_bits: 12, controlled_bits: 7, fixed_offset: 0 };
        assert!(bad.validate(&cfg).is_err());
        let hp6 = AdversaryModel { page_bits: 21, controlled_bits: 6, fixed_offset: 0x3c0 };
        assert!(hp6.validate(&cfg).is_ok());
        let mut ms = machine(12, false);
        assert!(build_pool(&mut ms, 10, &hp6, 1).is_err());
    }

    #[test]
    fn sampling() {
        let pool: Vec<_> = (0..50u64).map(|i| VirtAddr(i << 12)).collect();
        let s = sample_candidate_set(&pool, 50, 3).unwrap();
        let mut sorted = s.addrs.clone();
        sorted.sort();
        assert_eq!(sorted, pool);
        assert_eq!(s, sample_candidate_set(&pool, 50, 3).unwrap());
        assert_eq!(s.stride, 4096);
        assert!(matches!(
            sample_candidate_set(&pool, 51, 3),
            Err(ConfigError::PoolTooSmall { requested: 51, available: 50 })
        ));
    }
}
