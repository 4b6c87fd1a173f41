//! Proximal policy optimisation on a shared actor-critic.
//!
//! Loss per minibatch (means over samples):
//!
//! ```text
//! L = -min(r A, clip(r, 1-e, 1+e) A) + c_v (V - G)^2 - c_h H(pi)
//! ```
//!
//! with `r = pi(a|o) / pi_old(a|o)` and the advantage `A = G - V_old`.

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;

use super::nn::{clip_grad_norm, Adam};
use super::policy::PolicyModel;
use super::TrainConfig;

/// One agent-step of experience.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub allowed: Vec<bool>,
    pub action: usize,
    pub old_log_prob: f64,
    pub value: f64,
    pub ret: f64,
    pub advantage: f64,
}

/// `G(t) = sum_{tau = t+1..T} gamma^(tau - t - 1) R(tau)` where
/// `rewards[i]` holds `R(i + 1)`, i.e. the reward that follows step `i`.
pub fn discounted_return(rewards: &[f64], gamma: f64, t: usize) -> f64 {
    rewards[t.min(rewards.len())..].iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// `discounted_return` for every `t`, by backward recursion.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// The clipped surrogate `min(r A, clip(r) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Optimiser state of both networks.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoOptimizer {
    pub actor: Adam,
    pub critic: Adam,
}

impl PpoOptimizer {
    pub fn new(policy: &PolicyModel, learning_rate: f64) -> Self {
        PpoOptimizer {
            actor: Adam::new(policy.actor.n_params(), learning_rate),
            critic: Adam::new(policy.critic.n_params(), learning_rate),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Share of samples whose surrogate was clipped.
    pub clip_fraction: f64,
}

impl LossTerms {
    pub fn total(&self, config: &TrainConfig) -> f64 {
        self.policy_loss + config.value_coef * self.value_loss - config.entropy_coef * self.entropy
    }
}

/// Diagnostics of one [`ppo_update`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub loss: LossTerms,
    pub minibatches: usize,
    /// The update produced a non-finite loss and was rolled back.
    pub aborted: bool,
}

/// Loss of `batch` and its gradients for the actor and the critic.
pub fn loss_and_gradients(
    policy: &PolicyModel,
    batch: &[&Sample],
    config: &TrainConfig,
) -> (LossTerms, Vec<f64>, Vec<f64>) {
    let mut ga = vec![0.0; policy.actor.n_params()];
    let mut gc = vec![0.0; policy.critic.n_params()];
    let mut terms = LossTerms::default();
    if batch.is_empty() {
        return (terms, ga, gc);
    }
    let n = batch.len() as f64;
    let eps = config.clip_ratio;
    let mut clipped = 0usize;
    for s in batch {
        let (out, cache) = policy.forward_cached(&s.features, &s.allowed).expect("samples match the policy");
        let lp = out.log_probs[s.action];
        let ratio = (lp - s.old_log_prob).exp();
        let surrogate = clipped_surrogate(ratio, s.advantage, eps);
        let unclipped_active = ratio * s.advantage <= ratio.clamp(1.0 - eps, 1.0 + eps) * s.advantage;
        if !unclipped_active {
            clipped += 1;
        }
        let entropy: f64 = out.probs.iter().zip(&out.log_probs).filter(|(p, _)| **p > 0.0).map(|(p, lp)| -p * lp).sum();
        terms.policy_loss -= surrogate / n;
        terms.entropy += entropy / n;
        terms.value_loss += (out.value - s.ret).powi(2) / n;

        // d L / d logits
        let mut d_logits = vec![0.0; out.probs.len()];
        for k in 0..out.probs.len() {
            if !s.allowed[k] {
                continue;
            }
            let p = out.probs[k];
            let mut d = 0.0;
            if unclipped_active {
                let indicator = if k == s.action { 1.0 } else { 0.0 };
                d -= ratio * s.advantage * (indicator - p);
            }
            if p > 0.0 {
                // -c_h dH/dz_k = c_h p_k (log p_k + H)
                d += config.entropy_coef * p * (out.log_probs[k] + entropy);
            }
            d_logits[k] = d / n;
        }
        policy.actor.backward(&cache.actor, &d_logits, &mut ga);
        let d_value = 2.0 * config.value_coef * (out.value - s.ret) / n;
        policy.critic.backward(&cache.critic, &[d_value], &mut gc);
    }
    terms.clip_fraction = clipped as f64 / n;
    (terms, ga, gc)
}

/// Standardises advantages in place; a batch with no spread is centred only.
pub fn normalize_advantages(samples: &mut [Sample]) {
    if samples.is_empty() {
        return;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for s in samples.iter_mut() {
        s.advantage = if std > 1e-8 { (s.advantage - mean) / std } else { 0.0 };
    }
}

/// Runs `epochs` passes of shuffled minibatch updates over `samples`.
/// A non-finite loss or parameter restores the state from before the call.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut PolicyModel,
    optimizer: &mut PpoOptimizer,
    samples: &[Sample],
    config: &TrainConfig,
    rng: &mut R,
) -> UpdateStats {
    let backup = (policy.clone(), optimizer.clone());
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mb = config.minibatch_size.max(1);
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (terms, mut ga, mut gc) = loss_and_gradients(policy, &batch, config);
            let finite = terms.total(config).is_finite() && ga.iter().chain(&gc).all(|g| g.is_finite());
            if !finite {
                warn!("non-finite PPO loss; update rolled back");
                (*policy, *optimizer) = backup;
                return UpdateStats { aborted: true, ..stats };
            }
            clip_grad_norm(&mut ga, config.max_grad_norm);
            clip_grad_norm(&mut gc, config.max_grad_norm);
            optimizer.actor.step(policy.actor.params_mut(), &ga);
            optimizer.critic.step(policy.critic.params_mut(), &gc);
            stats.loss = terms;
            stats.minibatches += 1;
        }
    }
    if !policy.is_finite() {
        warn!("non-finite policy parameters after PPO update; rolled back");
        (*policy, *optimizer) = backup;
        stats.aborted = true;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marl::observation::{FeatureScales, ObservationLayout};
    use crate::rng::stream;
    use crate::scenario::preset;
    use rand::Rng;

    fn tiny_policy(n_aps: usize, hidden: usize, seed: u64) -> PolicyModel {
        let scenario = preset("smallscale").unwrap();
        let config = TrainConfig { hidden_sizes: vec![hidden], ..TrainConfig::default() };
        let layout = ObservationLayout { n_aps, n_neighbors: 0 };
        let mut p =
            PolicyModel::new(layout, FeatureScales::for_scenario(&scenario, 1.0), &config, &mut stream(seed, 0));
        // lift the actor out of its near-uniform start so gradients are not tiny
        let mut rng = stream(seed, 1);
        for w in p.actor.params_mut() {
            *w += rng.random_range(-0.5..0.5);
        }
        p
    }

    #[test]
    fn returns_match_examples_and_brute_force() {
        assert!((discounted_return(&[1.0, 1.0, 1.0], 0.6, 0) - 1.96).abs() < 1e-12);
        assert_eq!(discounted_return(&[3.0, 5.0], 1e-12, 0), 3.0 + 5e-12);
        let mut rng = stream(5, 0);
        for _ in 0..50 {
            let rewards: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
            let gamma = rng.random_range(0.01..0.99);
            let all = discounted_returns(&rewards, gamma);
            for t in 0..rewards.len() {
                let brute: f64 =
                    (t + 1..=rewards.len()).map(|tau| gamma.powi((tau - t - 1) as i32) * rewards[tau - 1]).sum();
                assert!((all[t] - brute).abs() < 1e-9);
                assert!((discounted_return(&rewards, gamma, t) - brute).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn surrogate_never_rewards_ratios_outside_the_clip_range() {
        let clip = 0.2;
        let mut rng = stream(6, 0);
        for _ in 0..1000 {
            let ratio = rng.random_range(0.0..3.0);
            let adv = rng.random_range(-2.0..2.0);
            let s = clipped_surrogate(ratio, adv, clip);
            let bounded = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
            assert!(s <= bounded + 1e-12, "surrogate exceeds its clipped value");
            assert!(s <= ratio * adv + 1e-12);
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut policy = tiny_policy(3, 4, 11);
        let config = TrainConfig { entropy_coef: 0.05, value_coef: 0.5, clip_ratio: 0.2, ..TrainConfig::default() };
        let mut rng = stream(12, 0);
        let dim = policy.layout.dim();
        let samples: Vec<Sample> = (0..6)
            .map(|i| {
                let features: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let allowed = vec![true, i % 3 != 0, true];
                let out = policy.forward(&features, &allowed).unwrap();
                let action = if i % 2 == 0 { 0 } else { 2 };
                Sample {
                    old_log_prob: out.log_probs[action] + rng.random_range(-0.05..0.05),
                    value: out.value,
                    ret: rng.random_range(-1.0..1.0),
                    advantage: rng.random_range(-1.0..1.0),
                    features,
                    allowed,
                    action,
                }
            })
            .collect();
        let batch: Vec<&Sample> = samples.iter().collect();
        let (_, ga, gc) = loss_and_gradients(&policy, &batch, &config);
        let loss = |p: &PolicyModel| loss_and_gradients(p, &batch, &config).0.total(&config);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for (net, grads) in [(0, &ga), (1, &gc)] {
            for i in 0..grads.len() {
                let get = |p: &mut PolicyModel| if net == 0 { p.actor.params_mut() } else { p.critic.params_mut() }[i];
                let orig = get(&mut policy);
                let set = |p: &mut PolicyModel, v: f64| {
                    if net == 0 {
                        p.actor.params_mut()[i] = v
                    } else {
                        p.critic.params_mut()[i] = v
                    }
                };
                set(&mut policy, orig + h);
                let up = loss(&policy);
                set(&mut policy, orig - h);
                let down = loss(&policy);
                set(&mut policy, orig);
                let fd = (up - down) / (2.0 * h);
                let scale = fd.abs().max(grads[i].abs());
                if scale > 1e-7 {
                    worst = worst.max((fd - grads[i]).abs() / scale);
                }
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn zero_advantage_leaves_the_actor_unchanged() {
        let mut policy = tiny_policy(3, 8, 2);
        let config = TrainConfig { entropy_coef: 0.0, epochs: 3, minibatch_size: 4, ..TrainConfig::default() };
        let dim = policy.layout.dim();
        let samples: Vec<Sample> = (0..10)
            .map(|i| {
                let features: Vec<f64> = (0..dim).map(|k| ((i * dim + k) as f64).sin()).collect();
                let allowed = vec![true; 3];
                let out = policy.forward(&features, &allowed).unwrap();
                Sample {
                    old_log_prob: out.log_probs[i % 3],
                    value: out.value,
                    ret: 1.0,
                    advantage: 0.0,
                    features,
                    allowed,
                    action: i % 3,
                }
            })
            .collect();
        let before = policy.actor.clone();
        let mut opt = PpoOptimizer::new(&policy, 1e-2);
        let stats = ppo_update(&mut policy, &mut opt, &samples, &config, &mut stream(0, 0));
        assert!(!stats.aborted);
        assert_eq!(policy.actor, before);
    }

    #[test]
    fn two_armed_bandit_converges() {
        let mut policy = tiny_policy(2, 8, 3);
        let config = TrainConfig {
            learning_rate: 1e-2,
            entropy_coef: 0.0,
            epochs: 1,
            minibatch_size: 16,
            ..TrainConfig::default()
        };
        let mut opt = PpoOptimizer::new(&policy, config.learning_rate);
        let features = vec![0.5; policy.layout.dim()];
        let allowed = vec![true, true];
        let mut rng = stream(4, 0);
        let mut p_best = 0.0;
        for _ in 0..500 {
            let out = policy.forward(&features, &allowed).unwrap();
            p_best = out.probs[1];
            if p_best > 0.9 {
                break;
            }
            let mut batch: Vec<Sample> = (0..16)
                .map(|_| {
                    let action = usize::from(rng.random::<f64>() < out.probs[1]);
                    let reward = if action == 1 { 1.0 } else { 0.0 };
                    Sample {
                        features: features.clone(),
                        allowed: allowed.clone(),
                        action,
                        old_log_prob: out.log_probs[action],
                        value: out.value,
                        ret: reward,
                        advantage: reward - out.value,
                    }
                })
                .collect();
            normalize_advantages(&mut batch);
            ppo_update(&mut policy, &mut opt, &batch, &config, &mut rng);
        }
        assert!(p_best > 0.9, "p(best arm) = {p_best}");
    }

    #[test]
    fn non_finite_batch_is_rolled_back() {
        let mut policy = tiny_policy(2, 4, 5);
        let config = TrainConfig::default();
        let dim = policy.layout.dim();
        let bad = Sample {
            features: vec![0.1; dim],
            allowed: vec![true, true],
            action: 0,
            old_log_prob: 0.0,
            value: 0.0,
            ret: f64::NAN,
            advantage: 1.0,
        };
        let before = policy.clone();
        let mut opt = PpoOptimizer::new(&policy, 1e-3);
        let stats = ppo_update(&mut policy, &mut opt, &[bad], &config, &mut stream(0, 0));
        assert!(stats.aborted);
        assert_eq!(policy, before);
    }
}
