//! Models for how likely a random candidate set is to evict, what finding
//! one costs, and which initial size minimizes the total cost.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::cache::CacheConfig;
use crate::memory::AdversaryModel;
use crate::reduction::Algorithm;

/// `2^(γ - c - s)`: chance that a random candidate shares a class with a fixed address.
pub fn collision_probability(adversary: &AdversaryModel, cfg: &CacheConfig) -> f64 {
    let exp = adversary.controlled_bits as i32 - cfg.set_bits as i32 - cfg.slice_bits as i32;
    2f64.powi(exp)
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `P(X >= a)` for `X ~ Binomial(n, p)`: probability that `n` random
/// candidates contain at least `a` addresses congruent with a fixed target.
pub fn prob_eviction_specific(n: u64, p: f64, a: u64) -> f64 {
    if a == 0 || p >= 1.0 {
        return if n >= a { 1.0 } else { 0.0 };
    }
    if n < a || p <= 0.0 {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let ln_term = |k: u64| ln_binomial(n, k) + k as f64 * lp + (n - k) as f64 * lq;
    let mean = n as f64 * p;
    if mean < a as f64 {
        // Upper tail is small: add it up directly until terms vanish.
        let mut terms = Vec::new();
        for k in a..=n {
            let t = ln_term(k);
            terms.push(t);
            if k as f64 > mean && t < terms[0] - 40.0 {
                break;
            }
        }
        log_sum_exp(terms.into_iter()).exp().min(1.0)
    } else {
        let lower = log_sum_exp((0..a).map(ln_term));
        (-lower.exp()).max(-1.0) + 1.0
    }
}

/// `ln P(Y <= a)` for `Y ~ Poisson(lambda)`.
fn ln_poisson_cdf(lambda: f64, a: u64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let ll = lambda.ln();
    let ln_pmf = |k: u64| k as f64 * ll - lambda - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
    if lambda < a as f64 {
        // The cdf is close to one; sum the upper tail so its size survives rounding.
        let mut terms = Vec::new();
        for k in a + 1.. {
            let t = ln_pmf(k);
            terms.push(t);
            if t < terms[0] - 40.0 {
                break;
            }
        }
        (-log_sum_exp(terms.into_iter()).exp()).ln_1p()
    } else {
        log_sum_exp((0..=a).map(ln_pmf)).min(0.0)
    }
}

/// Probability that `n` candidates thrown into `bins` classes overflow some
/// class, i.e. that one class receives more than `a` of them.
///
/// Approximates the multinomial bin counts by independent
/// `Poisson(n / bins)` variables: `1 - P(Pois(n/B) <= a)^B`.
pub fn prob_eviction_any(n: u64, bins: u64, a: u64) -> f64 {
    if n <= a || bins == 0 {
        return 0.0;
    }
    let ln_all_ok = bins as f64 * ln_poisson_cdf(n as f64 / bins as f64, a);
    -ln_all_ok.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvictionMode {
    SpecificAddress,
    ArbitraryAddress,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvictionModel {
    pub collision_prob: f64,
    pub assoc: u64,
    pub bins: u64,
    pub mode: EvictionMode,
}

impl EvictionModel {
    pub fn from_geometry(adversary: &AdversaryModel, cfg: &CacheConfig, mode: EvictionMode) -> Self {
        let bins = 1u64 << (cfg.set_bits + cfg.slice_bits - adversary.controlled_bits.min(cfg.set_bits));
        Self { collision_prob: collision_probability(adversary, cfg), assoc: cfg.assoc as u64, bins, mode }
    }

    /// Probability that a random set of `n` candidates is an eviction set.
    pub fn probability(&self, n: u64) -> f64 {
        match self.mode {
            EvictionMode::SpecificAddress => prob_eviction_specific(n, self.collision_prob, self.assoc),
            EvictionMode::ArbitraryAddress => prob_eviction_any(n, self.bins, self.assoc),
        }
    }

    /// Accesses one reduction of an `n`-element set costs under `algorithm`.
    pub fn reduction_cost(&self, n: u64, algorithm: Algorithm) -> f64 {
        let n = n as f64;
        match algorithm {
            Algorithm::Baseline => n * n,
            Algorithm::GroupTesting => (self.assoc * (self.assoc + 1)) as f64 * n,
        }
    }
}

/// Expected accesses spent drawing sets of size `n` until one evicts:
/// `n / p(n)`, infinite when `p(n) = 0`.
pub fn expected_search_cost(n: u64, model: &EvictionModel) -> f64 {
    let p = model.probability(n);
    if p <= 0.0 {
        f64::INFINITY
    } else {
        n as f64 / p
    }
}

const MAX_SIZE: u64 = 1_000_000;

/// Integer `n` in `[a, 10^6]` minimizing `n / p(n) + R(n)`.
pub fn optimal_initial_size(model: &EvictionModel, algorithm: Algorithm) -> u64 {
    let f = |n: u64| expected_search_cost(n, model) + model.reduction_cost(n, algorithm);
    let lo = model.assoc.max(1);

    // Coarse logarithmic grid to bracket the unimodal region.
    let steps = 400;
    let ratio = (MAX_SIZE as f64 / lo as f64).powf(1.0 / steps as f64);
    let mut grid: Vec<u64> = (0..=steps).map(|i| (lo as f64 * ratio.powi(i)).round() as u64).collect();
    grid.dedup();
    let best = (0..grid.len()).min_by(|&i, &j| f(grid[i]).total_cmp(&f(grid[j]))).expect("non-empty grid");
    let (mut left, mut right) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);

    // Golden-section search down to a short interval.
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    while right - left > 16 {
        let span = (right - left) as f64;
        let m1 = right - (phi * span).round() as u64;
        let m2 = left + (phi * span).round() as u64;
        if f(m1) <= f(m2) {
            right = m2;
        } else {
            left = m1;
        }
    }

    (left..=right).min_by(|&x, &y| f(x).total_cmp(&f(y))).expect("non-empty interval")
}

/// Accesses of the group-testing reduction from the unrolled recurrence:
/// `a^2 n + a n - a^3 - a^2`.
pub fn closed_form_group_accesses(n: u64, a: u64) -> u64 {
    a * a * n + a * n - a * a * a - a * a
}
