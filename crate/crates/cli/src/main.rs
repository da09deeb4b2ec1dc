//! `evset`: batch driver for eviction-set experiments on the simulated cache.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 when an
//! experiment fails after its configuration was accepted.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evset_core::experiment::{
    run_find_all, run_model_report, run_per_set_sweep, run_rate_experiment, run_scaling_experiment, ExperimentSpec,
    Preset,
};
use evset_core::ExperimentError;

use config::{LoadError, Overrides};
use output::Table;

#[derive(Parser)]
#[command(name = "evset", version, about = "Eviction-set experiments on a simulated last-level cache")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment spec; defaults apply to anything left out.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// CSV destination; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Machine preset: skylake-like, haswell-like or custom.
    #[arg(long, global = true, value_name = "NAME", value_parser = config::parse_preset)]
    preset: Option<Preset>,
    /// Trials per point, overriding `run.trials`.
    #[arg(long, global = true, value_name = "K")]
    trials: Option<usize>,
    /// Also write the full result and spec as JSON.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Model curves and optimal initial set sizes.
    Predict,
    /// Eviction and reduction rates for each N in `run.n_values`.
    Rates,
    /// Rates for targets in individual set indexes.
    Sweep,
    /// Reduction cost against N with fitted exponents.
    Scaling,
    /// Minimal eviction sets for every class a pool overflows.
    FindAll,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Predict => "predict",
            Command::Rates => "rates",
            Command::Sweep => "sweep",
            Command::Scaling => "scaling",
            Command::FindAll => "find-all",
        }
    }
}

enum Failure {
    Config(String),
    Experiment(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Experiment(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Experiment(format!("writing output: {e}"))
    }
}

fn mirror<T: serde::Serialize>(json: bool, name: &str, spec: &ExperimentSpec, r: &T) -> std::io::Result<Option<Vec<u8>>> {
    json.then(|| output::render_json(name, spec, r)).transpose()
}

fn run_command(cmd: Command, spec: &ExperimentSpec, json: bool) -> Result<(Table, Option<Vec<u8>>), Failure> {
    let name = cmd.name();
    Ok(match cmd {
        Command::Predict => {
            let r = run_model_report(spec)?;
            (output::model_table(&r), mirror(json, name, spec, &r)?)
        }
        Command::Rates => {
            let r = run_rate_experiment(spec)?;
            (output::rates_table(&r), mirror(json, name, spec, &r)?)
        }
        Command::Sweep => {
            let r = run_per_set_sweep(spec)?;
            (output::sweep_table(&r), mirror(json, name, spec, &r)?)
        }
        Command::Scaling => {
            let r = run_scaling_experiment(spec)?;
            (output::scaling_table(&r), mirror(json, name, spec, &r)?)
        }
        Command::FindAll => {
            let r = run_find_all(spec)?;
            (output::find_all_table(&r), mirror(json, name, spec, &r)?)
        }
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let ov = Overrides { seed: c.seed, preset: c.preset, trials: c.trials };
    let spec = config::resolve(c.config.as_deref(), &ov)?;
    let (table, json) = run_command(cli.command, &spec, c.json.is_some())?;
    let csv = output::render(cli.command.name(), &spec, &table)?;
    output::emit(c.out.as_deref(), &csv)?;
    if let (Some(p), Some(bytes)) = (&c.json, json) {
        std::fs::write(p, bytes)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Experiment(m)) => {
            eprintln!("experiment failed: {m}");
            ExitCode::from(2)
        }
    }
}
