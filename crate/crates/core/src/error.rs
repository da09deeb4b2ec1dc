use thiserror::Error;

/// Invalid or inconsistent configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid cache geometry: {0}")]
    Geometry(String),
    #[error("invalid replacement policy setup: {0}")]
    Policy(String),
    #[error("invalid adversary model: {0}")]
    Adversary(String),
    #[error("physical address space exhausted: {0}")]
    AddressSpaceExhausted(String),
    #[error("candidate set of {requested} requested from a pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("test configuration: {0}")]
    Test(String),
    #[error("experiment specification: {0}")]
    Experiment(String),
}

/// Failure of an experiment after a valid configuration was accepted.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("exponent fit refused: {0}")]
    FitRefused(String),
}
