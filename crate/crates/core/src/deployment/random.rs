//! Uniform random placement baseline.

use rand::Rng;

use super::{Evaluator, Incumbent, SearchOutcome};
use crate::rng::{self, streams};

/// Each iteration flips a fair coin per MAP; a MAP that deploys picks a
/// uniformly random free location. The best feasible plan seen is kept, and
/// the trace holds its cost after each iteration.
pub fn random_deployment(evaluator: &Evaluator<'_>, iterations: usize, seed: u64) -> SearchOutcome {
    assert!(iterations >= 1, "at least one iteration");
    let scenario = evaluator.scenario();
    let eligible: Vec<usize> = scenario.grid.iter().filter(|g| g.eligible).map(|g| g.id).collect();
    let mut rng = rng::stream(seed, streams::RANDOM_SEARCH);
    let mut incumbent = Incumbent::default();
    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut free = eligible.clone();
        let mut chosen = Vec::new();
        for _map in 0..scenario.fleet_size() {
            if rng.random_bool(0.5) && !free.is_empty() {
                chosen.push(free.swap_remove(rng.random_range(0..free.len())));
            }
        }
        incumbent.offer(&evaluator.evaluate(&chosen));
        trace.push(incumbent.best_cost());
    }
    incumbent.finish(trace, iterations)
}
