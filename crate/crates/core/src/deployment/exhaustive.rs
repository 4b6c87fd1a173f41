//! Brute-force placement over every subset of locations up to `K_max`.

use super::{Evaluator, Incumbent, SearchOutcome};
use crate::error::DeploymentError;

/// Subsets enumerated before the search refuses to run.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveConfig {
    /// Largest subset size; defaults to the scenario's `K_max`.
    pub max_subset_size: Option<usize>,
    pub budget: u128,
}

impl Default for ExhaustiveConfig {
    fn default() -> Self {
        ExhaustiveConfig { max_subset_size: None, budget: DEFAULT_ENUMERATION_BUDGET }
    }
}

/// `sum_{i=0..=k} C(n, i)`, saturating at `u128::MAX`.
pub fn combination_count(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1; // C(n, 0)
    for i in 0..=k.min(n) {
        total = total.saturating_add(term);
        // C(n, i + 1) = C(n, i) * (n - i) / (i + 1), exact in integers
        term = term.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    total
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic
/// order; returns false after the last one.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Judges every subset of eligible locations of size `0..=K_max`, smallest
/// sizes first. The trace holds the best feasible cost after each subset.
pub fn exhaustive_search(
    evaluator: &Evaluator<'_>,
    config: &ExhaustiveConfig,
) -> Result<SearchOutcome, DeploymentError> {
    let scenario = evaluator.scenario();
    let eligible: Vec<usize> = scenario.grid.iter().filter(|g| g.eligible).map(|g| g.id).collect();
    let n = eligible.len();
    let k_max = config.max_subset_size.unwrap_or(scenario.max_deployed).min(scenario.fleet_size()).min(n);
    let combinations = combination_count(n, k_max);
    if combinations > config.budget {
        return Err(DeploymentError::BudgetExceeded { combinations, budget: config.budget });
    }
    let mut incumbent = Incumbent::default();
    let mut trace = Vec::with_capacity(combinations as usize);
    let mut locations = Vec::with_capacity(k_max);
    for size in 0..=k_max {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            locations.clear();
            locations.extend(idx.iter().map(|&i| eligible[i]));
            incumbent.offer(&evaluator.evaluate(&locations));
            trace.push(incumbent.best_cost());
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    let evaluations = trace.len();
    Ok(incumbent.finish(trace, evaluations))
}
