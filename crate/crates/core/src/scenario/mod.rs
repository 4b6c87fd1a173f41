//! World description: area, access points, candidate MAP locations, users.
//!
//! A [`Scenario`] is immutable once loaded. Time-varying state (user
//! positions and demands) lives in a [`World`] owned by one simulation.

mod config;
mod dynamics;
mod geometry;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::deployment::CostModel;

pub use config::{load_scenario, load_scenario_file, preset, preset_names, ScenarioConfig};
pub use dynamics::{resample_demands, sample_demand, spawn_users, step_mobility, World};
pub use geometry::{elevation_angle, in_coverage};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn sub(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        self.sub(other).norm()
    }

    pub fn horizontal_distance(&self, other: &Vec3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Unit vector; the zero vector maps to itself.
    pub fn normalized(&self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            *self
        } else {
            Vec3::new(self.x / n, self.y / n, self.z / n)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Area {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }

    pub fn size_m2(&self) -> f64 {
        self.width_m * self.height_m
    }
}

/// A candidate MAP position. Every MAP may use every location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLocation {
    pub id: usize,
    pub position: Vec3,
    pub eligible: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApKind {
    Mbs,
    Map,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Sub6,
    Mmwave,
}

/// Radio and capacity description of one access point. Id 0 is the MBS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccessPointConfig {
    pub id: usize,
    pub kind: ApKind,
    pub band: Band,
    pub carrier_ghz: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub antenna_gain_max_dbi: f64,
    /// Back/side-lobe level of the sectored MAP pattern; unused by the MBS.
    pub antenna_gain_min_dbi: f64,
    pub half_power_beamwidth_deg: f64,
    pub aperture_deg: f64,
    /// Maximum number of simultaneously served users (N_i).
    pub capacity: usize,
    /// Fixed position; only the MBS has one.
    pub position: Option<Vec3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: usize,
    pub position: Vec3,
    pub demand_bps: f64,
    pub qos_target: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityModel {
    pub step_length_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    pub mean_demand_bps: f64,
}

/// UE receive gains; a UE carries one antenna per band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UeAntenna {
    pub sub6_gain_dbi: f64,
    pub mmwave_gain_dbi: f64,
}

impl UeAntenna {
    pub fn gain(&self, band: Band) -> f64 {
        match band {
            Band::Sub6 => self.sub6_gain_dbi,
            Band::Mmwave => self.mmwave_gain_dbi,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub area: Area,
    /// `aps[0]` is the MBS, `aps[1..]` the MAP fleet.
    pub aps: Vec<AccessPointConfig>,
    pub grid: Vec<GridLocation>,
    pub users: Vec<UserState>,
    pub horizon: usize,
    pub rng_seed: u64,
    pub mobility: MobilityModel,
    pub traffic: TrafficModel,
    pub channel: ChannelParams,
    pub cost: CostModel,
    /// K_max.
    pub max_deployed: usize,
    pub ue_antenna: UeAntenna,
    pub(crate) config: ScenarioConfig,
}

impl Scenario {
    pub fn mbs(&self) -> &AccessPointConfig {
        &self.aps[0]
    }

    pub fn maps(&self) -> &[AccessPointConfig] {
        &self.aps[1..]
    }

    pub fn fleet_size(&self) -> usize {
        self.aps.len() - 1
    }

    /// Radio profile shared by every MAP; `None` for an MBS-only scenario.
    pub fn map_template(&self) -> Option<&AccessPointConfig> {
        self.aps.get(1)
    }

    pub fn mbs_position(&self) -> Vec3 {
        self.mbs().position.expect("validated: MBS has a position")
    }

    /// Where undeployed MAPs wait; co-located with the MBS.
    pub fn staging_point(&self) -> Vec3 {
        self.mbs_position()
    }

    pub fn qos_target(&self) -> f64 {
        self.config.users.qos_target
    }

    /// Same world with a different population (used by density sweeps).
    pub fn with_user_count(&self, count: usize) -> Scenario {
        let mut config = self.config.clone();
        config.users.count = count;
        config.users.positions_m = None;
        config::build(config).expect("changing the user count keeps a valid scenario")
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut config = self.config.clone();
        config.rng_seed = seed;
        config::build(config).expect("changing the seed keeps a valid scenario")
    }

    pub fn with_config(&self, f: impl FnOnce(&mut ScenarioConfig)) -> crate::Result<Scenario> {
        let mut config = self.config.clone();
        f(&mut config);
        Ok(config::build(config)?)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// The fully materialised configuration, defaults included.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(&self.config).expect("scenario config always serialises")
    }
}
