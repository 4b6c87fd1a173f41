//! PPO training loop for the shared association policy.

use log::{info, warn};
use rayon::prelude::*;

use super::env::{run_episode, ActionSelection, Associator, EpisodeLog, OnAir};
use super::observation::{FeatureScales, ObservationLayout};
use super::policy::PolicyModel;
use super::ppo::{discounted_returns, normalize_advantages, ppo_update, PpoOptimizer, Sample, UpdateStats};
use super::TrainConfig;
use crate::deployment::DeploymentPlan;
use crate::error::MarlError;
use crate::rng::{self, streams};
use crate::scenario::Scenario;

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Checkpoint with the best moving-average training reward.
    pub policy: PolicyModel,
    /// Parameters after the last update.
    pub last: PolicyModel,
    /// Mean R_alpha per step, one entry per episode.
    pub curve: Vec<f64>,
    pub best_episode: usize,
    pub updates: Vec<UpdateStats>,
    /// Episode at which a non-finite update stopped training.
    pub diverged_at: Option<usize>,
}

/// Turns one rollout into PPO samples with shared-reward returns.
pub fn episode_samples(log: &EpisodeLog, allowed: &[bool], reward_scale: f64, gamma: f64) -> Vec<Sample> {
    let rewards: Vec<f64> = log.steps.iter().map(|s| s.utility * reward_scale).collect();
    let returns = discounted_returns(&rewards, gamma);
    let mut samples = Vec::with_capacity(log.agents.iter().map(Vec::len).sum());
    for (t, agents) in log.agents.iter().enumerate() {
        for a in agents {
            samples.push(Sample {
                features: a.features.clone(),
                allowed: allowed.to_vec(),
                action: a.action,
                old_log_prob: a.log_prob,
                value: a.value,
                ret: returns[t],
                advantage: returns[t] - a.value,
            });
        }
    }
    samples
}

pub fn new_policy(scenario: &Scenario, config: &TrainConfig, seed: u64) -> PolicyModel {
    let layout = ObservationLayout { n_aps: scenario.aps.len(), n_neighbors: config.n_neighbors };
    let scales = FeatureScales::for_scenario(scenario, config.alpha);
    PolicyModel::new(layout, scales, config, &mut rng::stream(seed, streams::POLICY_INIT))
}

/// Trains a fresh policy on `plan` for `config.episodes` episodes.
pub fn train(
    scenario: &Scenario,
    plan: &DeploymentPlan,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome, MarlError> {
    config.validate().map_err(MarlError::Config)?;
    let mut policy = new_policy(scenario, config, seed);
    train_from(scenario, plan, config, seed, &mut policy)
}

/// Continues training `policy` in place.
pub fn train_from(
    scenario: &Scenario,
    plan: &DeploymentPlan,
    config: &TrainConfig,
    seed: u64,
    policy: &mut PolicyModel,
) -> Result<TrainOutcome, MarlError> {
    config.validate().map_err(MarlError::Config)?;
    let on_air = OnAir::new(scenario, plan);
    let allowed = on_air.allowed();
    let n_users = config.n_users.unwrap_or(scenario.users.len());
    let length = config.episode_length.unwrap_or(scenario.horizon).max(1);
    let reward_scale = 1.0 / (n_users.max(1) as f64 * policy.scales.utility_per_user);
    let mut optimizer = PpoOptimizer::new(policy, config.learning_rate);

    let window = (config.episodes / 20).clamp(1, 50);
    let mut curve = Vec::with_capacity(config.episodes);
    let mut updates = Vec::new();
    let mut best: Option<(f64, usize, PolicyModel)> = None;
    let mut diverged_at = None;
    let group = config.episodes_per_update.max(1);

    let mut episode = 0;
    while episode < config.episodes {
        let batch: Vec<usize> = (episode..(episode + group).min(config.episodes)).collect();
        let snapshot = &*policy;
        let logs: Vec<Result<EpisodeLog, MarlError>> = batch
            .par_iter()
            .map(|&e| {
                let ep_seed = rng::derive_seed(seed, e as u64);
                let associator = Associator::Policy { policy: snapshot, selection: ActionSelection::Sample };
                let mut action_rng = rng::stream(ep_seed, streams::ROLLOUT);
                run_episode(scenario, &on_air, associator, n_users, length, config.alpha, ep_seed, &mut action_rng)
            })
            .collect();
        let mut samples = Vec::new();
        for log in logs {
            let log = log?;
            curve.push(log.steps.iter().map(|s| s.utility).sum::<f64>() / log.steps.len() as f64);
            samples.extend(episode_samples(&log, &allowed, reward_scale, config.gamma));
        }
        let recent = &curve[curve.len().saturating_sub(window)..];
        let score = recent.iter().sum::<f64>() / recent.len() as f64;
        if curve.len() >= window.min(config.episodes) && best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, curve.len() - 1, policy.clone()));
        }

        if config.normalize_advantages {
            normalize_advantages(&mut samples);
        }
        let mut mb_rng = rng::stream(rng::derive_seed(seed, updates.len() as u64), streams::MINIBATCH);
        let stats = ppo_update(policy, &mut optimizer, &samples, config, &mut mb_rng);
        updates.push(stats);
        episode += batch.len();
        if stats.aborted {
            warn!("training stopped at episode {episode}: non-finite update");
            diverged_at = Some(episode);
            break;
        }
        if episode % config.log_every.max(1) < batch.len() {
            info!(
                "episode {episode}/{}: mean R_alpha {:.3} (window {score:.3}), entropy {:.3}",
                config.episodes,
                curve.last().copied().unwrap_or(f64::NAN),
                stats.loss.entropy
            );
        }
    }
    let (_, best_episode, best_policy) = best.unwrap_or((f64::NEG_INFINITY, 0, policy.clone()));
    Ok(TrainOutcome { policy: best_policy, last: policy.clone(), curve, best_episode, updates, diverged_at })
}
