//! Monte-Carlo evaluation of an associator over independent episodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::{run_episode, ActionSelection, Associator, EpisodeLog, OnAir};
use crate::association::handover_frequency;
use crate::deployment::DeploymentPlan;
use crate::error::MarlError;
use crate::rng::{self, streams};
use crate::scenario::Scenario;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub episodes: usize,
    /// Steps per episode; `None` uses the scenario horizon.
    pub episode_length: Option<usize>,
    /// Users per episode; `None` uses the scenario population size.
    pub n_users: Option<usize>,
    pub alpha: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { episodes: 100, episode_length: None, n_users: None, alpha: 1.0 }
    }
}

/// Per-episode averages over steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub log_sum_rate: f64,
    pub utility: f64,
    pub sum_rate_mbps: f64,
    pub qos_fraction: f64,
    pub handover_frequency: f64,
}

/// Mean with a normal-approximation 95% confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Estimate {
        let n = values.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, std: f64::NAN, ci95: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std =
            if n > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Estimate { mean, std, ci95: 1.96 * std / (n as f64).sqrt(), n }
    }
}

/// Step-indexed averages over episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMean {
    pub t: usize,
    pub utility: f64,
    pub sum_rate_mbps: f64,
    pub qos_fraction: f64,
    /// Share of users whose serving access point changed since `t - 1`.
    pub handover_fraction: f64,
    pub load: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub deployed_maps: usize,
    pub n_users: usize,
    pub episodes: Vec<EpisodeSummary>,
    pub log_sum_rate: Estimate,
    pub utility: Estimate,
    pub sum_rate_mbps: Estimate,
    pub qos_fraction: Estimate,
    pub handover_frequency: Estimate,
    pub per_step: Vec<StepMean>,
}

fn summarize(log: &EpisodeLog) -> EpisodeSummary {
    let n = log.steps.len().max(1) as f64;
    EpisodeSummary {
        log_sum_rate: log.steps.iter().map(|s| s.log_sum_rate).sum::<f64>() / n,
        utility: log.steps.iter().map(|s| s.utility).sum::<f64>() / n,
        sum_rate_mbps: log.steps.iter().map(|s| s.sum_rate_bps).sum::<f64>() / n / 1e6,
        qos_fraction: log.steps.iter().map(|s| s.qos_fraction).sum::<f64>() / n,
        handover_frequency: handover_frequency(&log.serving_trace()),
    }
}

fn per_step(logs: &[EpisodeLog]) -> Vec<StepMean> {
    let Some(first) = logs.first() else { return Vec::new() };
    let n = logs.len() as f64;
    (0..first.steps.len())
        .map(|t| {
            let mean = |f: &dyn Fn(&EpisodeLog) -> f64| logs.iter().map(f).sum::<f64>() / n;
            let n_aps = first.steps[t].load.len();
            StepMean {
                t,
                utility: mean(&|l| l.steps[t].utility),
                sum_rate_mbps: mean(&|l| l.steps[t].sum_rate_bps / 1e6),
                qos_fraction: mean(&|l| l.steps[t].qos_fraction),
                handover_fraction: if t == 0 {
                    0.0
                } else {
                    mean(&|l| handover_frequency(&[l.steps[t - 1].serving.clone(), l.steps[t].serving.clone()]))
                },
                load: (0..n_aps).map(|ap| mean(&|l| l.steps[t].load[ap] as f64)).collect(),
            }
        })
        .collect()
}

/// Runs `config.episodes` episodes; episode `e` is seeded with
/// `derive_seed(seed, e)`, so two associators evaluated with the same seed
/// see identical users, mobility, demand and channel draws.
pub fn evaluate(
    associator: Associator<'_>,
    scenario: &Scenario,
    plan: &DeploymentPlan,
    config: &EvaluationConfig,
    seed: u64,
) -> Result<EvaluationReport, MarlError> {
    let on_air = OnAir::new(scenario, plan);
    let n_users = config.n_users.unwrap_or(scenario.users.len());
    let length = config.episode_length.unwrap_or(scenario.horizon).max(1);
    let logs: Vec<EpisodeLog> = (0..config.episodes)
        .into_par_iter()
        .map(|e| {
            let ep_seed = rng::derive_seed(seed, e as u64);
            let mut action_rng = rng::stream(ep_seed, streams::EVALUATION);
            run_episode(scenario, &on_air, associator, n_users, length, config.alpha, ep_seed, &mut action_rng)
        })
        .collect::<Result<_, _>>()?;
    let episodes: Vec<EpisodeSummary> = logs.iter().map(summarize).collect();
    let pick = |f: fn(&EpisodeSummary) -> f64| Estimate::of(&episodes.iter().map(f).collect::<Vec<_>>());
    let method = match associator {
        Associator::MaxSnr => "max-snr".to_string(),
        Associator::Policy { selection: ActionSelection::Greedy, .. } => "marl".to_string(),
        Associator::Policy { selection: ActionSelection::Sample, .. } => "marl-sampled".to_string(),
    };
    Ok(EvaluationReport {
        method,
        deployed_maps: on_air.deployed_maps(),
        n_users,
        log_sum_rate: pick(|e| e.log_sum_rate),
        utility: pick(|e| e.utility),
        sum_rate_mbps: pick(|e| e.sum_rate_mbps),
        qos_fraction: pick(|e| e.qos_fraction),
        handover_frequency: pick(|e| e.handover_frequency),
        per_step: per_step(&logs),
        episodes,
    })
}
