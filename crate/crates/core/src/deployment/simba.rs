//! Scalable iterative Monte-Carlo placement (SIMBA).
//!
//! Per episode the search starts from an empty deployment `D`, `k = K_max`
//! and the full pool of locations, then repeats up to `K_max` times:
//!
//! 1. Exploration: `M` times, deploy MAPs on `k` locations drawn from the
//!    pool, associate users with MAX-SNR, and fold each drawn location's
//!    score (mean QoS satisfaction of the users it serves, 0 if none) into
//!    its running mean. Scores persist across episodes.
//! 2. Exploitation: add the best-scored pool location to `D` and judge `D`.
//!    Stop the episode if it meets every constraint; otherwise the location
//!    stays in `D`, leaves the pool, and `k` shrinks by one.
//! 3. Keep `D` if it is feasible and cheaper than the incumbent.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Evaluator, Incumbent, SearchOutcome};
use crate::rng::{self, streams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimbaConfig {
    /// M, exploration draws per step.
    pub monte_carlo_iters: usize,
    /// T.
    pub episodes: usize,
    pub rng_seed: u64,
}

impl Default for SimbaConfig {
    fn default() -> Self {
        SimbaConfig { monte_carlo_iters: 10, episodes: 100, rng_seed: 0 }
    }
}

/// Running mean of the per-deployment scores of one location.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationScore {
    pub score: f64,
    pub visits: u64,
}

impl LocationScore {
    pub fn update(&mut self, deployment_score: f64) {
        self.visits += 1;
        self.score += (deployment_score - self.score) / self.visits as f64;
    }
}

/// SIMBA's search result together with the final location scores.
#[derive(Clone, Debug)]
pub struct SimbaOutcome {
    pub search: SearchOutcome,
    pub scores: Vec<LocationScore>,
}

fn argmax_random_tie<R: Rng>(pool: &[usize], scores: &[LocationScore], rng: &mut R) -> usize {
    let best = pool.iter().map(|&l| scores[l].score).fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..pool.len()).filter(|&i| scores[pool[i]].score == best).collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// Runs SIMBA on the evaluator's snapshot. The trace holds the best feasible
/// cost after each episode.
pub fn simba(evaluator: &Evaluator<'_>, config: &SimbaConfig) -> SimbaOutcome {
    assert!(config.monte_carlo_iters >= 1 && config.episodes >= 1, "M and T must be at least 1");
    let scenario = evaluator.scenario();
    let k_max = scenario.max_deployed.min(scenario.fleet_size());
    let eligible: Vec<usize> = scenario.grid.iter().filter(|g| g.eligible).map(|g| g.id).collect();
    let mut scores = vec![LocationScore::default(); scenario.grid.len()];
    let mut incumbent = Incumbent::default();
    let mut trace = Vec::with_capacity(config.episodes);
    let mut evaluations = 0usize;

    for episode in 0..config.episodes {
        let mut rng = rng::stream(rng::derive_seed(config.rng_seed, episode as u64), streams::SIMBA);
        let mut pool = eligible.clone();
        let mut deployed: Vec<usize> = Vec::with_capacity(k_max);
        let mut k = k_max;
        for _step in 0..k_max {
            if pool.is_empty() || k == 0 {
                break;
            }
            // Step 1: exploration
            for _ in 0..config.monte_carlo_iters {
                let draw = k.min(pool.len());
                let candidate: Vec<usize> = sample(&mut rng, pool.len(), draw).into_iter().map(|i| pool[i]).collect();
                let eval = evaluator.evaluate(&candidate);
                evaluations += 1;
                for (loc, score) in eval.location_scores() {
                    scores[loc].update(score);
                }
            }
            // Step 2: exploitation
            let pick = argmax_random_tie(&pool, &scores, &mut rng);
            deployed.push(pool.swap_remove(pick));
            let eval = evaluator.evaluate(&deployed);
            evaluations += 1;
            incumbent.offer(&eval);
            if eval.feasible {
                break;
            }
            k -= 1;
        }
        // Step 3 happens in `offer`: the incumbent changes only on a cheaper
        // feasible plan.
        trace.push(incumbent.best_cost());
    }
    SimbaOutcome { search: incumbent.finish(trace, evaluations), scores }
}
