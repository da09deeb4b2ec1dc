use std::path::Path;
use std::process::{Command, Output};

use evset_core::experiment::{AdversarySpec, ExperimentSpec, Preset, RecoverySpec};
use evset_core::ThresholdMode;
use tempfile::TempDir;

fn evset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evset")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

const SMALL_RATES: &str = "
[adversary]
kind = \"4kb\"

[run]
n_values = [1000, 2000]
trials = 20
";

#[test]
fn rates_csv_has_documented_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "r.toml", SMALL_RATES);
    let out = dir.path().join("rates.csv");
    let o = evset(&["rates", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# evset rates\n# seed = 3\n"));
    let lines = body(&text);
    assert_eq!(
        lines[0],
        "N,trials,eviction_rate,reduction_rate,mean_accesses,mean_tests,fail_not_evicting,fail_inconsistent,fail_budget"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1000,20,"));
    assert!(lines[2].starts_with("2000,20,"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "r.toml", SMALL_RATES);
    let run = |seed: &str, name: &str| {
        let p = dir.path().join(name);
        let o = evset(&["rates", "--config", &cfg, "--seed", seed, "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("9", "a.csv"), run("9", "b.csv"));
    assert_ne!(run("9", "a.csv"), run("10", "c.csv"));
}

#[test]
fn header_spec_parses_back_to_the_resolved_spec() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "r.toml", SMALL_RATES);
    let o = evset(&["rates", "--config", &cfg, "--trials", "4", "--preset", "haswell-like"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let start = text.lines().position(|l| l == "# resolved spec:").unwrap();
    let embedded: String = text
        .lines()
        .skip(start + 1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| format!("{}\n", l.trim_start_matches('#').trim_start()))
        .collect();
    let spec: ExperimentSpec = toml::from_str(&embedded).unwrap();
    assert_eq!(spec.run.trials, 4);
    assert_eq!(spec.machine.preset, Preset::HaswellLike);
    assert_eq!(spec.adversary, AdversarySpec::FourK);
}

#[test]
fn toml_round_trip_keeps_every_section() {
    let text = "
[machine]
preset = \"skylake-like\"
policy = \"adaptive-dueling\"
leader_mode = \"rand-runtime-leaders\"
tlb = true
jitter_sigma = 2.5

[adversary]
kind = \"4kb\"

[test]
repetitions = 5
threshold = { latency = 15.0 }
flip_probability = 0.05

[run]
n_values = [1200, 2500]
trials = 7
recovery = { kind = \"backtracking\", max_steps = 100 }
pool_size = 4096
";
    let spec: ExperimentSpec = toml::from_str(text).unwrap();
    assert_eq!(spec.adversary, AdversarySpec::FourK);
    assert_eq!(spec.test.threshold, ThresholdMode::Latency(15.0));
    assert_eq!(spec.run.recovery, Some(RecoverySpec::Backtracking { depth: None, max_steps: 100 }));
    let again: ExperimentSpec = toml::from_str(&toml::to_string(&spec).unwrap()).unwrap();
    assert_eq!(again, spec);

    let custom: ExperimentSpec = toml::from_str("[adversary]\nkind = \"custom\"\npage_bits = 12\ncontrolled_bits = 4\n").unwrap();
    assert_eq!(custom.adversary, AdversarySpec::Custom { page_bits: 12, controlled_bits: 4 });
    assert!(toml::from_str::<ExperimentSpec>("[adversary]\nkind = \"4kb\"\ncolour = 1\n").is_err());
    assert!(toml::from_str::<ExperimentSpec>("[adversary]\nkind = \"4kb\"\npage_bits = 12\n").is_err());
    assert!(toml::from_str::<ExperimentSpec>("[adversary]\nkind = \"custom\"\npage_bits = 12\n").is_err());
    assert!(toml::from_str::<ExperimentSpec>("[run]\nn_value = [1]\n").is_err());
    assert!(toml::from_str::<ExperimentSpec>("[run]\nrecovery = { kind = \"backtracking\", max_steps = 1, depht = 2 }\n").is_err());
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let typo = write_config(&dir, "typo.toml", "[run]\ntrails = 3\n");
    let unordered = write_config(&dir, "order.toml", "[run]\nn_values = [2000, 1000]\n");
    let missing = dir.path().join("missing.toml");
    for args in [
        vec!["rates", "--trials", "0"],
        vec!["rates", "--config", &typo],
        vec!["rates", "--config", &unordered],
        vec!["rates", "--config", missing.to_str().unwrap()],
        vec!["rates", "--preset", "custom"],
        vec!["rates", "--preset", "pentium"],
    ] {
        let o = evset(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn refused_fit_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.toml", "[adversary]\nkind = \"huge-page\"\n[run]\nn_values = [100, 200]\n");
    let o = evset(&["scaling", "--config", &cfg, "--trials", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fit refused"));
}

#[test]
fn predict_reports_optimal_sizes() {
    let o = evset(&["predict"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines = body(&text);
    assert_eq!(lines[0], "table,key,series,value");
    let optimal: Vec<&str> = lines.iter().copied().filter(|l| l.starts_with("optimal,")).collect();
    assert_eq!(optimal.len(), 9);
    assert!(lines.iter().any(|l| l.starts_with("probability,1500,specific,0.5")));
    assert!(lines.iter().any(|l| l.starts_with("cost,")));
}

#[test]
fn scaling_sweep_and_find_all_write_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "hp.toml",
        "
[adversary]
kind = \"huge-page\"

[run]
n_values = [100, 200, 400]
trials = 3

[sweep]
mode = \"partial\"
set_indexes = [0, 65]
n = 100

[find_all]
pool_sizes = [300]
",
    );
    let json = dir.path().join("scaling.json");
    let o = evset(&["scaling", "--config", &cfg, "--json", json.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# exponent group-testing = "));
    assert_eq!(body(&text)[0], "N,algorithm,trials,mean_accesses,mean_tests,success_rate");
    assert_eq!(body(&text).len(), 1 + 3 * 2);
    let mirror: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(mirror["command"], "scaling");
    assert_eq!(mirror["result"]["rows"].as_array().unwrap().len(), 6);

    let o = evset(&["sweep", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines = body(&text);
    assert!(lines[0].starts_with("set_index,role,N,trials,"));
    assert!(lines[1].starts_with("0,"));
    assert!(lines[2].starts_with("65,"));

    let o = evset(&["find-all", "--config", &cfg, "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(body(&text).len(), 3);
    assert!(body(&text)[1].starts_with("300,0,"));
}

#[test]
fn output_goes_to_file_not_stdout() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.csv");
    let o = evset(&["predict", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(Path::new(&out).exists());
}
