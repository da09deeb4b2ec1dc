use std::path::Path;

use evset_core::experiment::{ExperimentSpec, Preset};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: Box<toml::de::Error> },
    #[error(transparent)]
    Invalid(#[from] evset_core::ConfigError),
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
    pub trials: Option<usize>,
}

pub fn parse_spec(text: &str, origin: &str) -> Result<ExperimentSpec, LoadError> {
    toml::from_str(text).map_err(|e| LoadError::Parse { path: origin.to_string(), source: Box::new(e) })
}

/// Reads the config (or starts from defaults), applies overrides and validates.
pub fn resolve(path: Option<&Path>, ov: &Overrides) -> Result<ExperimentSpec, LoadError> {
    let mut spec = match path {
        Some(p) => {
            let shown = p.display().to_string();
            let text = std::fs::read_to_string(p).map_err(|source| LoadError::Read { path: shown.clone(), source })?;
            parse_spec(&text, &shown)?
        }
        None => ExperimentSpec::default(),
    };
    if let Some(s) = ov.seed {
        spec.run.seed = s;
    }
    if let Some(p) = ov.preset {
        spec.machine.preset = p;
    }
    if let Some(t) = ov.trials {
        spec.run.trials = t;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn parse_preset(s: &str) -> Result<Preset, String> {
    match s {
        "skylake-like" => Ok(Preset::SkylakeLike),
        "haswell-like" => Ok(Preset::HaswellLike),
        "custom" => Ok(Preset::Custom),
        _ => Err(format!("unknown preset `{s}` (expected skylake-like, haswell-like or custom)")),
    }
}
