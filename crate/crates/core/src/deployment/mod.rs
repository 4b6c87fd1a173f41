//! Deployment cost, placement constraints and placement search.
//!
//! A deployment is a set of grid locations, each hosting one MAP. Every
//! candidate is judged on a frozen snapshot (user positions, demands and one
//! sampled channel realization) by running MAX-SNR association and checking
//! the seven placement constraints:
//!
//! | id | meaning                                                |
//! |----|--------------------------------------------------------|
//! | C1 | association and placement variables are binary         |
//! | C2 | every MAP's move cost is at most `max_per_map_cost`    |
//! | C3 | every access point serves at most its capacity         |
//! | C4 | every user is associated to exactly one access point   |
//! | C5 | every user's QoS satisfaction reaches its target       |
//! | C6 | a MAP occupies at most one location, never a shared one |
//! | C7 | at most `K_max` MAPs are deployed                      |

mod exhaustive;
mod random;
mod simba;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::association::{max_snr_association, AssociationMatrix, QosReport};
use crate::channel::{LinkTable, RadioContext, Realization, Site, Transmitter};
use crate::rng::{self, streams};
use crate::scenario::{Scenario, UserState, Vec3};

pub use exhaustive::{combination_count, exhaustive_search, ExhaustiveConfig, DEFAULT_ENUMERATION_BUDGET};
pub use random::random_deployment;
pub use simba::{simba, LocationScore, SimbaConfig, SimbaOutcome};

/// Prices MAP moves: `energy_per_meter_j * distance * energy_unit_cost + rent_cost`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    /// E_c, cost per joule.
    pub energy_unit_cost: f64,
    /// Energy spent per metre flown, in joules.
    pub energy_per_meter_j: f64,
    /// c_0, fixed cost of operating one MAP.
    pub rent_cost: f64,
    /// C_max; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_per_map_cost: Option<f64>,
}

impl CostModel {
    pub(crate) fn validate(&self) -> Result<(), (String, String)> {
        let fields = [
            ("energy_unit_cost", self.energy_unit_cost),
            ("energy_per_meter_j", self.energy_per_meter_j),
            ("rent_cost", self.rent_cost),
            ("max_per_map_cost", self.max_per_map_cost.unwrap_or(0.0)),
        ];
        for (path, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err((path.into(), format!("must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }

    /// Cost of flying a MAP from `from` to `to` and operating it there.
    pub fn move_cost(&self, from: Vec3, to: Vec3) -> f64 {
        self.energy_per_meter_j * from.distance(&to) * self.energy_unit_cost + self.rent_cost
    }

    /// Largest possible single-MAP cost over `targets` starting at `from`.
    fn worst_move(&self, from: Vec3, targets: impl Iterator<Item = Vec3>) -> f64 {
        targets.map(|p| self.move_cost(from, p)).fold(self.rent_cost, f64::max)
    }
}

/// Assignment of MAPs to grid locations with its cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    /// MAP id -> grid location id.
    pub placements: BTreeMap<usize, usize>,
    /// Where MAPs were before this plan; MAPs absent here start at the
    /// staging point.
    pub previous_placements: BTreeMap<usize, usize>,
    pub per_map_cost: BTreeMap<usize, f64>,
    pub total_cost: f64,
    pub deployed_count: usize,
}

impl DeploymentPlan {
    /// The empty plan: every MAP stays at the staging point.
    pub fn empty() -> Self {
        DeploymentPlan {
            placements: BTreeMap::new(),
            previous_placements: BTreeMap::new(),
            per_map_cost: BTreeMap::new(),
            total_cost: 0.0,
            deployed_count: 0,
        }
    }

    /// Places MAPs on `locations`. MAPs that already sit on a chosen
    /// location stay there; the remaining locations (ascending) go to the
    /// remaining MAPs (ascending id).
    pub fn from_locations(
        scenario: &Scenario,
        locations: &[usize],
        previous: &BTreeMap<usize, usize>,
    ) -> Result<Self, crate::error::DeploymentError> {
        use crate::error::DeploymentError;
        if let Some(&bad) = locations.iter().find(|&&l| l >= scenario.grid.len()) {
            return Err(DeploymentError::UnknownLocation(bad));
        }
        if locations.len() > scenario.fleet_size() {
            return Err(DeploymentError::FleetTooSmall { requested: locations.len(), fleet: scenario.fleet_size() });
        }
        let mut wanted: Vec<usize> = locations.to_vec();
        wanted.sort_unstable();
        let mut placements = BTreeMap::new();
        for (&map, &loc) in previous {
            if let Ok(i) = wanted.binary_search(&loc) {
                if !placements.values().any(|&l| l == loc) {
                    placements.insert(map, loc);
                    wanted.remove(i);
                }
            }
        }
        let free_maps: Vec<usize> = (1..=scenario.fleet_size()).filter(|m| !placements.contains_key(m)).collect();
        for (map, loc) in free_maps.into_iter().zip(wanted) {
            placements.insert(map, loc);
        }
        Ok(Self::with_placements(scenario, placements, previous.clone()))
    }

    /// Prices an explicit MAP -> location map. Location ids must exist.
    pub fn with_placements(
        scenario: &Scenario,
        placements: BTreeMap<usize, usize>,
        previous_placements: BTreeMap<usize, usize>,
    ) -> Self {
        let staging = scenario.staging_point();
        let per_map_cost: BTreeMap<usize, f64> = placements
            .iter()
            .map(|(&map, &loc)| {
                let from = previous_placements.get(&map).map_or(staging, |&p| scenario.grid[p].position);
                (map, scenario.cost.move_cost(from, scenario.grid[loc].position))
            })
            .collect();
        DeploymentPlan {
            total_cost: per_map_cost.values().sum(),
            deployed_count: placements.len(),
            placements,
            previous_placements,
            per_map_cost,
        }
    }

    /// Deployed locations in ascending order.
    pub fn locations(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.placements.values().copied().collect();
        l.sort_unstable();
        l
    }

    /// Transmitters on air: the MBS at site 0, then each MAP at site
    /// `1 + location` of a table built over [`Site::all`].
    pub fn transmitters(&self) -> Vec<Transmitter> {
        std::iter::once(Transmitter { ap_id: 0, site: 0 })
            .chain(self.placements.iter().map(|(&map, &loc)| Transmitter { ap_id: map, site: 1 + loc }))
            .collect()
    }
}

/// C(t): sum of the deployed MAPs' move costs.
pub fn total_cost(plan: &DeploymentPlan) -> f64 {
    plan.per_map_cost.values().sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub id: String,
    pub passed: bool,
    /// UE ids for C4/C5, MAP ids for C2/C6, access-point ids for C3,
    /// empty otherwise.
    pub offenders: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, id: &str) -> &ConstraintCheck {
        self.checks.iter().find(|c| c.id == id).expect("constraint ids are C1..C7")
    }
}

fn check(id: &str, offenders: Vec<usize>, detail: String) -> ConstraintCheck {
    ConstraintCheck { id: id.into(), passed: offenders.is_empty(), offenders, detail }
}

/// Evaluates C1-C7 for a plan, its association and the resulting QoS.
pub fn check_constraints(
    plan: &DeploymentPlan,
    assoc: &AssociationMatrix,
    qos: &QosReport,
    scenario: &Scenario,
) -> ConstraintReport {
    let n_aps = scenario.aps.len();
    let mut checks = Vec::with_capacity(7);

    let bad_locations: Vec<usize> = plan
        .placements
        .iter()
        .filter(|(&m, &l)| m == 0 || m >= n_aps || l >= scenario.grid.len())
        .map(|(&m, _)| m)
        .collect();
    let c1_ok = bad_locations.is_empty() && assoc.n_aps() <= n_aps;
    checks.push(ConstraintCheck {
        id: "C1".into(),
        passed: c1_ok,
        detail: if c1_ok {
            "binary placement and association".into()
        } else {
            format!("placements reference unknown MAPs or locations: {bad_locations:?}")
        },
        offenders: bad_locations,
    });

    let c2: Vec<usize> = match scenario.cost.max_per_map_cost {
        Some(cap) => plan.per_map_cost.iter().filter(|(_, &c)| c > cap).map(|(&m, _)| m).collect(),
        None => Vec::new(),
    };
    let c2_detail = match scenario.cost.max_per_map_cost {
        Some(cap) => format!("C_max = {cap}"),
        None => "C_max unbounded".into(),
    };
    checks.push(check("C2", c2, c2_detail));

    let mut c3 = Vec::new();
    let mut loads = Vec::new();
    for ap in 0..assoc.n_aps() {
        let load = assoc.load(ap);
        if load > 0 {
            loads.push(format!("{ap}:{load}"));
        }
        if load > scenario.aps.get(ap).map_or(0, |a| a.capacity) {
            c3.push(ap);
        }
    }
    checks.push(check("C3", c3, format!("loads {}", loads.join(" "))));

    let c4 = assoc.unassociated();
    let c4_detail = format!("{} of {} users unassociated", c4.len(), assoc.n_users());
    checks.push(check("C4", c4, c4_detail));

    let c5: Vec<usize> = (0..qos.satisfied.len()).filter(|&j| !qos.satisfied[j]).collect();
    let c5_detail = format!("{} of {} users below their QoS target", c5.len(), qos.satisfied.len());
    checks.push(check("C5", c5, c5_detail));

    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut c6 = Vec::new();
    for (&map, &loc) in &plan.placements {
        if let Some(&first) = seen.get(&loc) {
            c6.extend([first, map]);
        } else {
            seen.insert(loc, map);
        }
    }
    c6.sort_unstable();
    c6.dedup();
    checks.push(check("C6", c6, "one location per MAP, one MAP per location".into()));

    let count = plan.placements.len();
    let c7_ok = count <= scenario.max_deployed;
    checks.push(ConstraintCheck {
        id: "C7".into(),
        passed: c7_ok,
        offenders: Vec::new(),
        detail: format!("{count} deployed, K_max = {}", scenario.max_deployed),
    });

    ConstraintReport { checks }
}

/// Outcome of judging one candidate set of locations.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub plan: DeploymentPlan,
    pub association: AssociationMatrix,
    pub rates_bps: Vec<f64>,
    pub qos: QosReport,
    pub feasible: bool,
}

impl Evaluation {
    /// Mean QoS satisfaction of the users served by each deployed location
    /// (0 for a location serving nobody), as `(location, score)`.
    pub fn location_scores(&self) -> Vec<(usize, f64)> {
        self.plan
            .placements
            .iter()
            .map(|(&map, &loc)| {
                let served: Vec<f64> = (0..self.association.n_users())
                    .filter(|&j| self.association.serving_ap(j) == Some(map))
                    .map(|j| self.qos.kappa[j])
                    .collect();
                let score = if served.is_empty() { 0.0 } else { served.iter().sum::<f64>() / served.len() as f64 };
                (loc, score)
            })
            .collect()
    }

    pub fn satisfied_fraction(&self) -> f64 {
        self.qos.satisfied_fraction
    }
}

/// Judges candidate deployments on one frozen snapshot.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    users: Vec<UserState>,
    links: LinkTable,
    previous: BTreeMap<usize, usize>,
}

impl<'a> Evaluator<'a> {
    /// Snapshot of `users` with one channel realization drawn from `seed`.
    pub fn new(scenario: &'a Scenario, users: Vec<UserState>, seed: u64) -> Self {
        let mut channel_rng = rng::stream(seed, streams::CHANNEL);
        let links =
            LinkTable::for_scenario(scenario, Site::all(scenario), &users, Realization::Sampled, &mut channel_rng);
        Evaluator { scenario, users, links, previous: BTreeMap::new() }
    }

    /// The scenario's initial population and seed.
    pub fn for_scenario(scenario: &'a Scenario) -> Self {
        Self::new(scenario, scenario.users.clone(), scenario.rng_seed)
    }

    /// Prices moves from an earlier plan instead of the staging point.
    pub fn with_previous(mut self, previous: BTreeMap<usize, usize>) -> Self {
        self.previous = previous;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn users(&self) -> &[UserState] {
        &self.users
    }

    pub fn links(&self) -> &LinkTable {
        &self.links
    }

    pub fn plan(&self, locations: &[usize]) -> DeploymentPlan {
        DeploymentPlan::from_locations(self.scenario, locations, &self.previous).expect("locations come from the grid")
    }

    /// An upper bound on the cost of any plan within K_max.
    pub fn cost_upper_bound(&self) -> f64 {
        let cost = &self.scenario.cost;
        let starts: Vec<Vec3> = std::iter::once(self.scenario.staging_point())
            .chain(self.previous.values().map(|&l| self.scenario.grid[l].position))
            .collect();
        let worst = starts
            .iter()
            .map(|&s| cost.worst_move(s, self.scenario.grid.iter().map(|g| g.position)))
            .fold(0.0, f64::max);
        worst * self.scenario.max_deployed.max(1) as f64
    }

    /// Deploys MAPs on `locations`, runs MAX-SNR and checks C1-C7.
    pub fn evaluate(&self, locations: &[usize]) -> Evaluation {
        let plan = self.plan(locations);
        self.evaluate_plan(plan)
    }

    pub fn evaluate_plan(&self, plan: DeploymentPlan) -> Evaluation {
        let txs = plan.transmitters();
        let ctx = RadioContext::new(&self.links, &txs);
        let association = max_snr_association(&ctx, self.scenario.aps.len());
        let rates_bps = ctx.serving_rates(association.serving());
        let qos = QosReport::new(&rates_bps, &self.users);
        let feasible = self.fast_feasible(&plan, &association, &qos);
        Evaluation { plan, association, rates_bps, qos, feasible }
    }

    fn fast_feasible(&self, plan: &DeploymentPlan, assoc: &AssociationMatrix, qos: &QosReport) -> bool {
        plan.deployed_count <= self.scenario.max_deployed
            && self.scenario.cost.max_per_map_cost.is_none_or(|cap| plan.per_map_cost.values().all(|&c| c <= cap))
            && assoc.unassociated().is_empty()
            && qos.all_satisfied()
    }

    pub fn report(&self, evaluation: &Evaluation) -> ConstraintReport {
        check_constraints(&evaluation.plan, &evaluation.association, &evaluation.qos, self.scenario)
    }
}

/// Result of a placement search.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// Cheapest feasible plan found (ties: fewer MAPs).
    pub best: Option<DeploymentPlan>,
    /// When nothing was feasible: the candidate that satisfied the most users.
    pub best_effort: Option<DeploymentPlan>,
    /// Best-so-far cost after each iteration; infinite until a feasible plan
    /// has been seen.
    pub trace: Vec<f64>,
    /// Number of candidate deployments judged.
    pub evaluations: usize,
}

impl SearchOutcome {
    pub fn is_feasible(&self) -> bool {
        self.best.is_some()
    }

    /// The plan to act on: the best feasible one, else the best effort.
    pub fn plan(&self) -> Option<&DeploymentPlan> {
        self.best.as_ref().or(self.best_effort.as_ref())
    }
}

/// Keeps the incumbent feasible plan and the best-effort fallback.
#[derive(Debug, Default)]
pub(crate) struct Incumbent {
    best: Option<DeploymentPlan>,
    effort: Option<(f64, DeploymentPlan)>,
}

impl Incumbent {
    pub(crate) fn offer(&mut self, eval: &Evaluation) {
        if eval.feasible {
            let better = match &self.best {
                None => true,
                Some(b) => {
                    eval.plan.total_cost < b.total_cost
                        || (eval.plan.total_cost == b.total_cost && eval.plan.deployed_count < b.deployed_count)
                }
            };
            if better {
                self.best = Some(eval.plan.clone());
            }
        } else {
            let f = eval.satisfied_fraction();
            if self.effort.as_ref().is_none_or(|(best, _)| f > *best) {
                self.effort = Some((f, eval.plan.clone()));
            }
        }
    }

    pub(crate) fn best_cost(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.total_cost)
    }

    pub(crate) fn finish(self, trace: Vec<f64>, evaluations: usize) -> SearchOutcome {
        let best_effort = if self.best.is_some() { None } else { self.effort.map(|(_, p)| p) };
        SearchOutcome { best: self.best, best_effort, trace, evaluations }
    }
}
