use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{Area, MobilityModel, Scenario, TrafficModel, UserState, Vec3};
use crate::rng::{self, streams, SimRng};

/// Folds a coordinate back into `[0, max]` by mirroring at both walls.
fn reflect(v: f64, max: f64) -> f64 {
    if max <= 0.0 {
        return 0.0;
    }
    let period = 2.0 * max;
    let r = v.rem_euclid(period);
    if r > max {
        period - r
    } else {
        r
    }
}

/// One random-walk step: every UE moves `step_length_m` in a uniformly drawn
/// direction, reflecting off the area boundary. Altitude is untouched.
pub fn step_mobility<R: Rng + ?Sized>(users: &mut [UserState], area: &Area, mobility: &MobilityModel, rng: &mut R) {
    for ue in users.iter_mut() {
        let heading = rng.random::<f64>() * TAU;
        let x = ue.position.x + mobility.step_length_m * heading.cos();
        let y = ue.position.y + mobility.step_length_m * heading.sin();
        ue.position.x = reflect(x, area.width_m);
        ue.position.y = reflect(y, area.height_m);
    }
}

/// Poisson demand in whole Mbit/s, returned in bit/s.
pub fn sample_demand<R: Rng + ?Sized>(traffic: &TrafficModel, rng: &mut R) -> f64 {
    let mean_mbps = traffic.mean_demand_bps / 1e6;
    if mean_mbps <= 0.0 {
        return 0.0;
    }
    let poisson = Poisson::new(mean_mbps).expect("positive finite rate");
    poisson.sample(rng) * 1e6
}

pub fn resample_demands<R: Rng + ?Sized>(users: &mut [UserState], traffic: &TrafficModel, rng: &mut R) {
    for ue in users.iter_mut() {
        ue.demand_bps = sample_demand(traffic, rng);
    }
}

/// Uniform placement of `count` ground users with freshly drawn demands.
pub fn spawn_users<R: Rng + ?Sized>(
    area: &Area,
    count: usize,
    traffic: &TrafficModel,
    qos_target: f64,
    rng: &mut R,
) -> Vec<UserState> {
    let mut users: Vec<UserState> = (0..count)
        .map(|id| UserState {
            id,
            position: Vec3::new(rng.random::<f64>() * area.width_m, rng.random::<f64>() * area.height_m, 0.0),
            demand_bps: 0.0,
            qos_target,
        })
        .collect();
    resample_demands(&mut users, traffic, rng);
    users
}

/// Mutable per-simulation state: user positions and demands at step `t`.
#[derive(Clone, Debug)]
pub struct World {
    pub users: Vec<UserState>,
    pub t: usize,
    mobility_rng: SimRng,
    demand_rng: SimRng,
}

impl World {
    /// Starts from the scenario's initial population.
    pub fn new(scenario: &Scenario, seed: u64) -> World {
        World {
            users: scenario.users.clone(),
            t: 0,
            mobility_rng: rng::stream(seed, streams::MOBILITY),
            demand_rng: rng::stream(seed, streams::DEMAND),
        }
    }

    /// Starts from a fresh uniform placement of `count` users.
    pub fn fresh(scenario: &Scenario, count: usize, seed: u64) -> World {
        let mut placement = rng::stream(seed, streams::USERS);
        let users = spawn_users(&scenario.area, count, &scenario.traffic, scenario.qos_target(), &mut placement);
        World {
            users,
            t: 0,
            mobility_rng: rng::stream(seed, streams::MOBILITY),
            demand_rng: rng::stream(seed, streams::DEMAND),
        }
    }

    /// Moves every UE one step and redraws demands.
    pub fn advance(&mut self, scenario: &Scenario) {
        step_mobility(&mut self.users, &scenario.area, &scenario.mobility, &mut self.mobility_rng);
        resample_demands(&mut self.users, &scenario.traffic, &mut self.demand_rng);
        self.t += 1;
    }
}
