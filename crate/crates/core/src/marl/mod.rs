//! Multi-agent user association trained with PPO.
//!
//! Every user is an agent that requests one access point per step from a
//! shared actor-critic policy. Access points arbitrate the requests (see
//! [`resolve_requests`]) and all agents receive the same team reward, the
//! alpha-fair network utility `R_alpha(t)`.

mod env;
mod evaluate;
pub mod nn;
mod observation;
mod policy;
mod ppo;
mod train;

use serde::{Deserialize, Serialize};

pub use env::{
    resolve_requests, run_episode, ActionSelection, AgentStep, Associator, Episode, EpisodeLog, OnAir, StepRecord,
};
pub use evaluate::{evaluate, EpisodeSummary, Estimate, EvaluationConfig, EvaluationReport, StepMean};
pub use observation::{
    build_observation, nearest_neighbors, FeatureScales, Observation, ObservationContext, ObservationLayout,
};
pub use policy::{config_hash, masked_softmax, PolicyModel, PolicyOutput, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use ppo::{
    clipped_surrogate, discounted_return, discounted_returns, loss_and_gradients, normalize_advantages, ppo_update,
    LossTerms, PpoOptimizer, Sample, UpdateStats,
};
pub use train::{episode_samples, new_policy, train, train_from, TrainOutcome};

/// Training hyper-parameters. Defaults follow the reference setup
/// (learning rate 1e-4, discount 0.6, 3000 episodes, alpha = 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub episodes: usize,
    /// Steps per episode; `None` uses the scenario horizon.
    pub episode_length: Option<usize>,
    pub clip_ratio: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Episodes collected between two PPO updates.
    pub episodes_per_update: usize,
    pub alpha: f64,
    pub n_neighbors: usize,
    pub hidden_sizes: Vec<usize>,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    /// Users per training episode; `None` uses the scenario population.
    pub n_users: Option<usize>,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            gamma: 0.6,
            episodes: 3000,
            episode_length: None,
            clip_ratio: 0.2,
            epochs: 4,
            minibatch_size: 256,
            episodes_per_update: 1,
            alpha: 1.0,
            n_neighbors: 5,
            hidden_sizes: vec![64, 64],
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            normalize_advantages: true,
            n_users: None,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        let checks: [(bool, &str); 8] = [
            (self.gamma > 0.0 && self.gamma < 1.0, "gamma must lie in (0, 1)"),
            (self.learning_rate > 0.0 && self.learning_rate.is_finite(), "learning_rate must be positive"),
            (self.clip_ratio > 0.0 && self.clip_ratio < 1.0, "clip_ratio must lie in (0, 1)"),
            (self.epochs >= 1 && self.minibatch_size >= 1, "epochs and minibatch_size must be at least 1"),
            (self.alpha >= 0.0 && self.alpha.is_finite(), "alpha must be non-negative"),
            (
                !self.hidden_sizes.is_empty() && self.hidden_sizes.iter().all(|&h| h > 0),
                "hidden_sizes must be non-empty",
            ),
            (self.entropy_coef >= 0.0 && self.value_coef >= 0.0, "loss coefficients must be non-negative"),
            (self.max_grad_norm > 0.0, "max_grad_norm must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err((*msg).to_string()),
            None => Ok(()),
        }
    }
}
