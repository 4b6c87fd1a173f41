//! Time-stepped association episodes over a fixed deployment.
//!
//! An episode starts from a fresh uniform placement of users. Every step
//! draws a new channel realization for the current positions, lets the
//! associator pick serving access points, evaluates rates and utilities, then
//! moves the users and redraws their demands.

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use super::observation::{build_observation, FeatureScales, Observation, ObservationContext, ObservationLayout};
use super::policy::PolicyModel;
use crate::association::{max_snr_association, network_utility, AssociationMatrix, QosReport};
use crate::channel::{LinkQuality, LinkTable, RadioContext, Realization, Site, Transmitter};
use crate::deployment::DeploymentPlan;
use crate::error::MarlError;
use crate::rng::{self, streams, SimRng};
use crate::scenario::{Scenario, World};

/// Access points on air for one deployment plan.
#[derive(Clone, Debug)]
pub struct OnAir {
    sites: Vec<Site>,
    transmitters: Vec<Transmitter>,
    site_of_ap: Vec<Option<usize>>,
}

impl OnAir {
    /// The MBS plus every placed MAP.
    pub fn new(scenario: &Scenario, plan: &DeploymentPlan) -> OnAir {
        let mut sites = vec![Site::mbs(scenario)];
        let mut transmitters = vec![Transmitter { ap_id: 0, site: 0 }];
        let mut site_of_ap = vec![None; scenario.aps.len()];
        site_of_ap[0] = Some(0);
        for (&map, &loc) in &plan.placements {
            site_of_ap[map] = Some(sites.len());
            transmitters.push(Transmitter { ap_id: map, site: sites.len() });
            sites.push(Site::grid(scenario, loc));
        }
        OnAir { sites, transmitters, site_of_ap }
    }

    pub fn n_aps(&self) -> usize {
        self.site_of_ap.len()
    }

    /// Access points an agent may request.
    pub fn allowed(&self) -> Vec<bool> {
        self.site_of_ap.iter().map(Option::is_some).collect()
    }

    pub fn transmitters(&self) -> &[Transmitter] {
        &self.transmitters
    }

    pub fn site_of_ap(&self) -> &[Option<usize>] {
        &self.site_of_ap
    }

    pub fn deployed_maps(&self) -> usize {
        self.transmitters.len() - 1
    }
}

/// Arbitrates one connection request per user: each access point accepts
/// up to its capacity, preferring higher SNR (ties: lower UE id). Requests
/// to access points that are off air or do not cover the user are rejected.
pub fn resolve_requests<Q: LinkQuality + ?Sized>(requests: &[usize], quality: &Q, n_aps: usize) -> AssociationMatrix {
    assert_eq!(requests.len(), quality.n_users(), "one request per user");
    let mut assoc = AssociationMatrix::empty(n_aps, requests.len());
    for slot in 0..quality.n_slots() {
        let ap = quality.slot_ap_id(slot);
        let mut bids: Vec<(usize, f64)> = requests
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == ap)
            .filter_map(|(ue, _)| quality.snr_db(slot, ue).map(|snr| (ue, snr)))
            .collect();
        bids.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (ue, _) in bids.into_iter().take(quality.slot_capacity(slot)) {
            assoc.assign(ue, Some(ap));
        }
    }
    assoc
}

/// How a policy turns its distribution into a request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSelection {
    Sample,
    /// Most likely action (ties: lower index).
    Greedy,
}

/// Who decides the association.
#[derive(Clone, Copy, Debug)]
pub enum Associator<'a> {
    MaxSnr,
    Policy { policy: &'a PolicyModel, selection: ActionSelection },
}

/// Metrics of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub serving: Vec<Option<usize>>,
    pub rates_bps: Vec<f64>,
    /// R_alpha with the episode's alpha.
    pub utility: f64,
    /// R_1, the log network sum-rate.
    pub log_sum_rate: f64,
    pub sum_rate_bps: f64,
    pub qos_fraction: f64,
    /// Users served by each access point id.
    pub load: Vec<usize>,
}

/// What an agent did in one step, for learning.
#[derive(Clone, Debug)]
pub struct AgentStep {
    pub features: Vec<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
}

/// A finished episode.
#[derive(Clone, Debug)]
pub struct EpisodeLog {
    pub steps: Vec<StepRecord>,
    /// `agents[t][j]`, filled only for policy rollouts.
    pub agents: Vec<Vec<AgentStep>>,
}

impl EpisodeLog {
    pub fn serving_trace(&self) -> Vec<Vec<Option<usize>>> {
        self.steps.iter().map(|s| s.serving.clone()).collect()
    }
}

/// One episode's mutable state.
pub struct Episode<'a> {
    scenario: &'a Scenario,
    on_air: &'a OnAir,
    world: World,
    channel_rng: SimRng,
    previous_actions: Vec<Option<usize>>,
    previous_rates: Vec<f64>,
    previous_utility: f64,
    alpha: f64,
}

impl<'a> Episode<'a> {
    pub fn new(scenario: &'a Scenario, on_air: &'a OnAir, n_users: usize, alpha: f64, seed: u64) -> Self {
        Episode {
            scenario,
            on_air,
            world: World::fresh(scenario, n_users, seed),
            channel_rng: rng::stream(seed, streams::CHANNEL),
            previous_actions: vec![None; n_users],
            previous_rates: vec![0.0; n_users],
            previous_utility: 0.0,
            alpha,
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Draws the channel for the current positions.
    pub fn sample_links(&mut self) -> LinkTable {
        LinkTable::for_scenario(
            self.scenario,
            self.on_air.sites.clone(),
            &self.world.users,
            Realization::Sampled,
            &mut self.channel_rng,
        )
    }

    pub fn observations(
        &self,
        links: &LinkTable,
        layout: &ObservationLayout,
        scales: &FeatureScales,
    ) -> Vec<Observation> {
        let ctx = ObservationContext {
            users: &self.world.users,
            links,
            site_of_ap: &self.on_air.site_of_ap,
            previous_actions: &self.previous_actions,
            previous_rates_bps: &self.previous_rates,
            previous_utility: self.previous_utility,
        };
        (0..self.world.users.len()).map(|ue| build_observation(ue, &ctx, layout, scales)).collect()
    }

    /// Scores `assoc`, remembers this step for the next observation and
    /// advances users.
    pub fn commit(&mut self, links: &LinkTable, assoc: AssociationMatrix, requests: Option<Vec<usize>>) -> StepRecord {
        let ctx = RadioContext::new(links, &self.on_air.transmitters);
        let rates = ctx.serving_rates(assoc.serving());
        let demands: Vec<f64> = self.world.users.iter().map(|u| u.demand_bps).collect();
        let utility = network_utility(&rates, &demands, &assoc, self.alpha).expect("rates are floored");
        let log_sum_rate = network_utility(&rates, &demands, &assoc, 1.0).expect("rates are floored");
        let qos = QosReport::new(&rates, &self.world.users);
        let load = (0..assoc.n_aps()).map(|ap| assoc.load(ap)).collect();
        let record = StepRecord {
            t: self.world.t,
            serving: assoc.serving().to_vec(),
            sum_rate_bps: rates.iter().sum(),
            rates_bps: rates,
            utility,
            log_sum_rate,
            qos_fraction: qos.satisfied_fraction,
            load,
        };
        self.previous_actions = match requests {
            Some(r) => r.into_iter().map(Some).collect(),
            None => assoc.serving().to_vec(),
        };
        self.previous_rates = record.rates_bps.clone();
        self.previous_utility = utility;
        self.world.advance(self.scenario);
        record
    }
}

/// Runs `length` steps. Policy decisions use `action_rng`.
pub fn run_episode<R: Rng>(
    scenario: &Scenario,
    on_air: &OnAir,
    associator: Associator<'_>,
    n_users: usize,
    length: usize,
    alpha: f64,
    seed: u64,
    action_rng: &mut R,
) -> Result<EpisodeLog, MarlError> {
    let mut episode = Episode::new(scenario, on_air, n_users, alpha, seed);
    let allowed = on_air.allowed();
    let mut log = EpisodeLog { steps: Vec::with_capacity(length), agents: Vec::new() };
    for _ in 0..length {
        let links = episode.sample_links();
        let record = match associator {
            Associator::MaxSnr => {
                let ctx = RadioContext::new(&links, on_air.transmitters());
                let assoc = max_snr_association(&ctx, on_air.n_aps());
                episode.commit(&links, assoc, None)
            }
            Associator::Policy { policy, selection } => {
                if policy.n_actions() != on_air.n_aps() {
                    return Err(MarlError::ActionSpace { policy: policy.n_actions(), deployment: on_air.n_aps() });
                }
                let observations = episode.observations(&links, &policy.layout, &policy.scales);
                let mut agents = Vec::with_capacity(observations.len());
                for obs in observations {
                    let out = policy.forward(&obs.features, &allowed)?;
                    let action = match selection {
                        ActionSelection::Greedy => greedy(&out.probs),
                        ActionSelection::Sample => {
                            WeightedIndex::new(&out.probs).expect("valid distribution").sample(action_rng)
                        }
                    };
                    agents.push(AgentStep {
                        features: obs.features,
                        action,
                        log_prob: out.log_probs[action],
                        value: out.value,
                    });
                }
                let requests: Vec<usize> = agents.iter().map(|a| a.action).collect();
                let ctx = RadioContext::new(&links, on_air.transmitters());
                let assoc = resolve_requests(&requests, &ctx, on_air.n_aps());
                log.agents.push(agents);
                episode.commit(&links, assoc, Some(requests))
            }
        };
        log.steps.push(record);
    }
    Ok(log)
}

fn greedy(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}
