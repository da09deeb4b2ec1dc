use evset_core::experiment::{run_find_all, ExperimentSpec, FindAllSpec, RunSpec};
use evset_core::reduction::FindAllConfig;
use evset_core::stats::{log_log_slope, mean};
use evset_core::{
    build_pool, find_all_eviction_sets, AdversaryModel, CacheConfig, MachineConfig, MachineState, TestConfig,
};

#[test]
fn one_overflowing_class_yields_one_set() {
    let cfg = CacheConfig::skylake_like();
    let mut ms = MachineState::new(MachineConfig::new(cfg.clone(), 21), 3).unwrap();
    let pool = build_pool(&mut ms, 2000, &AdversaryModel::huge_page(&cfg), 3).unwrap();
    let x = pool[0];
    let class: Vec<_> = pool.iter().copied().filter(|&y| ms.congruent(x, y)).take(2 * cfg.assoc).collect();
    assert_eq!(class.len(), 2 * cfg.assoc);

    let fa = FindAllConfig { subset_size: class.len(), max_failures: 3 };
    let out = find_all_eviction_sets(&mut ms, &class, &TestConfig::ideal(), &fa).unwrap();
    assert_eq!(out.sets.len(), 1);
    assert_eq!(out.sets[0].len(), cfg.assoc);
    assert!(ms.all_congruent(&out.sets[0]));
    assert!(ms.congruent(out.sets[0][0], x));
}

#[test]
fn pool_without_overflow_yields_nothing() {
    let cfg = CacheConfig::skylake_like();
    let mut ms = MachineState::new(MachineConfig::new(cfg.clone(), 21), 4).unwrap();
    let pool = build_pool(&mut ms, 4000, &AdversaryModel::huge_page(&cfg), 4).unwrap();
    let x = pool[0];
    let class: Vec<_> = pool.iter().copied().filter(|&y| ms.congruent(x, y)).take(cfg.assoc).collect();
    let fa = FindAllConfig { subset_size: 100, max_failures: 3 };
    let out = find_all_eviction_sets(&mut ms, &class, &TestConfig::ideal(), &fa).unwrap();
    assert!(out.sets.is_empty());
    assert!(find_all_eviction_sets(&mut ms, &class, &TestConfig::ideal(), &FindAllConfig { subset_size: 0, max_failures: 0 }).is_err());
}

fn scan_spec(pool_sizes: Vec<usize>, trials: usize) -> ExperimentSpec {
    ExperimentSpec {
        test: TestConfig::ideal(),
        run: RunSpec { trials, seed: 11, ..RunSpec::default() },
        find_all: FindAllSpec { pool_sizes, ..FindAllSpec::default() },
        ..ExperimentSpec::default()
    }
}

#[test]
fn scan_finds_most_overflowing_classes() {
    let rows = run_find_all(&scan_spec(vec![4000], 4)).unwrap();
    for r in &rows {
        assert_eq!(r.verified_sets, r.sets_found, "{r:?}");
        assert_eq!(r.distinct_classes, r.sets_found, "{r:?}");
        assert!(r.overflowing_classes > 0);
        assert!(2 * r.distinct_classes > r.overflowing_classes, "{r:?}");
    }
}

#[test]
fn scan_cost_grows_subquadratically() {
    let sizes = vec![2000, 4000, 8000];
    let rows = run_find_all(&scan_spec(sizes.clone(), 3)).unwrap();
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&n| {
            let per: Vec<f64> = rows.iter().filter(|r| r.pool_size == n).map(|r| r.accesses as f64).collect();
            (n as f64, mean(&per))
        })
        .collect();
    let slope = log_log_slope(&points).unwrap();
    println!("pool scan accesses {points:?} slope {slope:.3}");
    assert!(points.windows(2).all(|w| w[1].1 > w[0].1), "{points:?}");
    assert!(slope > 0.0 && slope < 1.5, "slope {slope}");
}
