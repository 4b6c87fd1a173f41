use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Scenario loading and validation failures. `path` is the dotted field path
/// inside the configuration document.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("geometry violation at `{path}`: {message}")]
    Geometry { path: String, message: String },
    #[error("unknown preset `{0}` (expected smallscale or mediumscale)")]
    UnknownPreset(String),
}

/// Evaluating a model outside its mathematical domain.
#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("{quantity} must be positive, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
    #[error("utility of {value} is undefined for alpha = {alpha}")]
    Utility { value: f64, alpha: f64 },
}

#[derive(Debug, Error)]
pub enum DeploymentError {
    #[error("exhaustive search needs {combinations} subsets, above the budget of {budget}")]
    BudgetExceeded { combinations: u128, budget: u128 },
    #[error("location {0} is not part of the grid")]
    UnknownLocation(usize),
    #[error("{requested} locations requested but the fleet only has {fleet} MAPs")]
    FleetTooSmall { requested: usize, fleet: usize },
}

#[derive(Debug, Error)]
pub enum MarlError {
    #[error("observation has {got} features, policy expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite observation feature at index {0}")]
    NonFiniteInput(usize),
    #[error("training diverged at episode {episode}; last good checkpoint kept")]
    Diverged { episode: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("policy has {policy} actions but the deployment exposes {deployment} access points")]
    ActionSpace { policy: usize, deployment: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Deployment(#[from] DeploymentError),
    #[error(transparent)]
    Marl(#[from] MarlError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
