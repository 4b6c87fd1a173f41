//! Shared actor-critic association policy and its checkpoint format.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::nn::{Mlp, MlpCache};
use super::observation::{FeatureScales, ObservationLayout};
use super::TrainConfig;
use crate::error::{Error, MarlError};

pub const CHECKPOINT_FORMAT: &str = "mapsim-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Actor and critic networks shared by every agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    pub layout: ObservationLayout,
    pub scales: FeatureScales,
    pub actor: Mlp,
    pub critic: Mlp,
    /// SHA-256 of the training configuration that produced the parameters.
    pub config_hash: String,
}

/// Action distribution and value estimate for one observation.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub value: f64,
}

/// Forward activations needed to backpropagate one sample.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub actor: MlpCache,
    pub critic: MlpCache,
}

/// Softmax over the allowed entries; masked entries get probability 0 and
/// log-probability `-inf`.
pub fn masked_softmax(logits: &[f64], allowed: &[bool]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(logits.len(), allowed.len());
    let max = logits.iter().zip(allowed).filter(|(_, a)| **a).map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
    assert!(max.is_finite(), "at least one action must be allowed and logits finite");
    let sum: f64 = logits.iter().zip(allowed).filter(|(_, a)| **a).map(|(l, _)| (l - max).exp()).sum();
    let log_z = max + sum.ln();
    let log_probs: Vec<f64> =
        logits.iter().zip(allowed).map(|(l, a)| if *a { l - log_z } else { f64::NEG_INFINITY }).collect();
    let probs = log_probs.iter().map(|lp| lp.exp()).collect();
    (probs, log_probs)
}

pub fn config_hash(config: &TrainConfig) -> String {
    let json = serde_json::to_vec(config).expect("train config serialises");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

impl PolicyModel {
    pub fn new<R: Rng + ?Sized>(
        layout: ObservationLayout,
        scales: FeatureScales,
        config: &TrainConfig,
        rng: &mut R,
    ) -> PolicyModel {
        let mut actor_sizes = vec![layout.dim()];
        actor_sizes.extend(&config.hidden_sizes);
        let mut critic_sizes = actor_sizes.clone();
        actor_sizes.push(layout.n_aps);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, 0.01, rng);
        let critic = Mlp::new(&critic_sizes, 1.0, rng);
        PolicyModel { layout, scales, actor, critic, config_hash: config_hash(config) }
    }

    pub fn n_actions(&self) -> usize {
        self.layout.n_aps
    }

    fn check_input(&self, features: &[f64], allowed: &[bool]) -> Result<(), MarlError> {
        if features.len() != self.layout.dim() {
            return Err(MarlError::ShapeMismatch { expected: self.layout.dim(), got: features.len() });
        }
        if allowed.len() != self.n_actions() {
            return Err(MarlError::ActionSpace { policy: self.n_actions(), deployment: allowed.len() });
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(MarlError::NonFiniteInput(i));
        }
        Ok(())
    }

    /// Action distribution over the allowed access points and the value.
    pub fn forward(&self, features: &[f64], allowed: &[bool]) -> Result<PolicyOutput, MarlError> {
        self.forward_cached(features, allowed).map(|(out, _)| out)
    }

    pub fn forward_cached(
        &self,
        features: &[f64],
        allowed: &[bool],
    ) -> Result<(PolicyOutput, ForwardCache), MarlError> {
        self.check_input(features, allowed)?;
        let (logits, actor) = self.actor.forward(features);
        let (value, critic) = self.critic.forward(features);
        let (probs, log_probs) = masked_softmax(&logits, allowed);
        Ok((PolicyOutput { probs, log_probs, value: value[0] }, ForwardCache { actor, critic }))
    }

    pub fn is_finite(&self) -> bool {
        self.actor.params().iter().chain(self.critic.params()).all(|p| p.is_finite())
    }

    pub fn to_json(&self) -> String {
        let doc = Checkpoint { format: CHECKPOINT_FORMAT.into(), version: CHECKPOINT_VERSION, policy: self.clone() };
        serde_json::to_string(&doc).expect("policy serialises")
    }

    pub fn from_json(text: &str) -> Result<PolicyModel, MarlError> {
        let doc: Checkpoint = serde_json::from_str(text).map_err(|e| MarlError::Checkpoint(e.to_string()))?;
        if doc.format != CHECKPOINT_FORMAT || doc.version != CHECKPOINT_VERSION {
            return Err(MarlError::Checkpoint(format!("unsupported checkpoint {} v{}", doc.format, doc.version)));
        }
        let p = doc.policy;
        let actor_ok = p.actor.n_inputs() == p.layout.dim() && p.actor.n_outputs() == p.layout.n_aps;
        let critic_ok = p.critic.n_inputs() == p.layout.dim() && p.critic.n_outputs() == 1;
        let sizes_ok = Mlp::from_parts(p.actor.sizes().to_vec(), p.actor.params().to_vec()).is_some()
            && Mlp::from_parts(p.critic.sizes().to_vec(), p.critic.params().to_vec()).is_some();
        if !(actor_ok && critic_ok && sizes_ok) {
            return Err(MarlError::Checkpoint("layer sizes do not match the observation layout".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> crate::Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> crate::Result<PolicyModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_json(&text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    policy: PolicyModel,
}
