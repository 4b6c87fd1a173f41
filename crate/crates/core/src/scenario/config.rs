//! TOML scenario schema. Every physical field carries its unit in its name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AccessPointConfig, ApKind, Area, Band, GridLocation, MobilityModel, Scenario, TrafficModel, UeAntenna, Vec3,
};
use crate::channel::ChannelParams;
use crate::deployment::CostModel;
use crate::error::ScenarioError;
use crate::rng::{self, streams};

const SMALLSCALE: &str = include_str!("../../presets/smallscale.toml");
const MEDIUMSCALE: &str = include_str!("../../presets/mediumscale.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub horizon_steps: usize,
    pub rng_seed: u64,
    pub area: AreaConfig,
    pub grid: GridConfig,
    pub users: UsersConfig,
    #[serde(default)]
    pub mobility: MobilityConfig,
    pub traffic: TrafficConfig,
    pub mbs: MbsConfig,
    pub maps: MapsConfig,
    #[serde(default)]
    pub channel: ChannelParams,
    pub cost: CostModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaConfig {
    pub width_m: f64,
    pub height_m: f64,
}

/// Either a regular `points_per_side`² lattice repeated at every altitude,
/// or an explicit list of `[x, y, z]` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_side: Option<usize>,
    pub altitudes_m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_m: Option<Vec<[f64; 3]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersConfig {
    pub count: usize,
    /// Q_j, as a fraction of the demand.
    pub qos_target: f64,
    #[serde(default)]
    pub sub6_gain_dbi: f64,
    #[serde(default)]
    pub mmwave_gain_dbi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions_m: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityKind {
    RandomWalk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    pub model: MobilityKind,
    pub step_length_m: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig { model: MobilityKind::RandomWalk, step_length_m: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficKind {
    Poisson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    pub model: TrafficKind,
    pub mean_demand_mbps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbsConfig {
    pub position_m: [f64; 3],
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub capacity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsConfig {
    pub count: usize,
    pub max_deployed: usize,
    pub band: Band,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub tx_power_dbm: f64,
    pub gain_max_dbi: f64,
    pub gain_min_dbi: f64,
    pub half_power_beamwidth_deg: f64,
    pub aperture_deg: f64,
    pub capacity: usize,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = toml::Deserializer::new(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Schema { path, message: e.into_inner().message().to_string() }
    })?;
    build(config)
}

pub fn load_scenario_file(path: &Path) -> crate::Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(load_scenario(&text)?)
}

pub fn preset_names() -> &'static [&'static str] {
    &["smallscale", "mediumscale"]
}

pub fn preset(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "smallscale" => load_scenario(SMALLSCALE),
        "mediumscale" => load_scenario(MEDIUMSCALE),
        other => Err(ScenarioError::UnknownPreset(other.to_string())),
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema { path: path.into(), message: message.into() }
}

fn geometry(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Geometry { path: path.into(), message: message.into() }
}

fn positive(path: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(schema(path, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(schema(path, format!("must be a non-negative number, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(schema(path, format!("must be finite, got {v}")))
    }
}

fn lattice(area: &Area, per_side: usize, altitudes: &[f64]) -> Vec<Vec3> {
    let step_x = area.width_m / (per_side + 1) as f64;
    let step_y = area.height_m / (per_side + 1) as f64;
    let mut points = Vec::with_capacity(per_side * per_side * altitudes.len());
    for &z in altitudes {
        for iy in 1..=per_side {
            for ix in 1..=per_side {
                points.push(Vec3::new(ix as f64 * step_x, iy as f64 * step_y, z));
            }
        }
    }
    points
}

pub(super) fn build(config: ScenarioConfig) -> Result<Scenario, ScenarioError> {
    positive("area.width_m", config.area.width_m)?;
    positive("area.height_m", config.area.height_m)?;
    let area = Area { width_m: config.area.width_m, height_m: config.area.height_m };

    let grid_cfg = &config.grid;
    if grid_cfg.altitudes_m.is_empty() {
        return Err(schema("grid.altitudes_m", "at least one altitude is required"));
    }
    for (i, &z) in grid_cfg.altitudes_m.iter().enumerate() {
        non_negative(&format!("grid.altitudes_m[{i}]"), z)?;
    }
    let points = match (grid_cfg.points_per_side, &grid_cfg.points_m) {
        (Some(_), Some(_)) => return Err(schema("grid", "give either points_per_side or points_m, not both")),
        (None, None) => return Err(schema("grid", "missing field `points_per_side` (or `points_m`)")),
        (Some(0), None) => return Err(schema("grid.points_per_side", "must be at least 1")),
        (Some(n), None) => lattice(&area, n, &grid_cfg.altitudes_m),
        (None, Some(pts)) => {
            if pts.is_empty() {
                return Err(schema("grid.points_m", "grid must not be empty"));
            }
            let mut out = Vec::with_capacity(pts.len());
            for (i, p) in pts.iter().enumerate() {
                let path = format!("grid.points_m[{i}]");
                let v = Vec3::new(p[0], p[1], p[2]);
                if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                    return Err(schema(path, "coordinates must be finite"));
                }
                if !area.contains(&v) {
                    return Err(geometry(path, format!("grid point outside area ({}, {}, {})", v.x, v.y, v.z)));
                }
                if !grid_cfg.altitudes_m.iter().any(|&z| (z - v.z).abs() < 1e-9) {
                    return Err(geometry(path, format!("altitude {} not in grid.altitudes_m", v.z)));
                }
                out.push(v);
            }
            out
        }
    };
    let grid: Vec<GridLocation> =
        points.into_iter().enumerate().map(|(id, position)| GridLocation { id, position, eligible: true }).collect();

    let users_cfg = &config.users;
    if !(0.0..=1.0).contains(&users_cfg.qos_target) {
        return Err(schema("users.qos_target", format!("must lie in [0, 1], got {}", users_cfg.qos_target)));
    }
    finite("users.sub6_gain_dbi", users_cfg.sub6_gain_dbi)?;
    finite("users.mmwave_gain_dbi", users_cfg.mmwave_gain_dbi)?;

    non_negative("mobility.step_length_m", config.mobility.step_length_m)?;
    positive("traffic.mean_demand_mbps", config.traffic.mean_demand_mbps)?;
    let traffic = TrafficModel { mean_demand_bps: config.traffic.mean_demand_mbps * 1e6 };

    let mbs = &config.mbs;
    let mbs_pos = Vec3::new(mbs.position_m[0], mbs.position_m[1], mbs.position_m[2]);
    if !(mbs_pos.x.is_finite() && mbs_pos.y.is_finite() && mbs_pos.z.is_finite()) || mbs_pos.z < 0.0 {
        return Err(geometry("mbs.position_m", "MBS position must be finite with z >= 0"));
    }
    positive("mbs.carrier_ghz", mbs.carrier_ghz)?;
    positive("mbs.bandwidth_mhz", mbs.bandwidth_mhz)?;
    finite("mbs.tx_power_dbm", mbs.tx_power_dbm)?;
    finite("mbs.antenna_gain_dbi", mbs.antenna_gain_dbi)?;

    let maps = &config.maps;
    positive("maps.carrier_ghz", maps.carrier_ghz)?;
    positive("maps.bandwidth_mhz", maps.bandwidth_mhz)?;
    finite("maps.tx_power_dbm", maps.tx_power_dbm)?;
    finite("maps.gain_max_dbi", maps.gain_max_dbi)?;
    finite("maps.gain_min_dbi", maps.gain_min_dbi)?;
    positive("maps.half_power_beamwidth_deg", maps.half_power_beamwidth_deg)?;
    if !(maps.aperture_deg > 0.0 && maps.aperture_deg <= 180.0) {
        return Err(schema("maps.aperture_deg", format!("must lie in (0, 180], got {}", maps.aperture_deg)));
    }
    if maps.capacity == 0 {
        return Err(schema("maps.capacity", "must be at least 1"));
    }
    if maps.max_deployed > maps.count {
        return Err(schema(
            "maps.max_deployed",
            format!("K_max = {} exceeds the fleet of {} MAPs", maps.max_deployed, maps.count),
        ));
    }

    config.channel.validate().map_err(|(path, message)| schema(format!("channel.{path}"), message))?;
    config.cost.validate().map_err(|(path, message)| schema(format!("cost.{path}"), message))?;

    let mut aps = Vec::with_capacity(maps.count + 1);
    aps.push(AccessPointConfig {
        id: 0,
        kind: ApKind::Mbs,
        band: Band::Sub6,
        carrier_ghz: mbs.carrier_ghz,
        tx_power_dbm: mbs.tx_power_dbm,
        bandwidth_hz: mbs.bandwidth_mhz * 1e6,
        antenna_gain_max_dbi: mbs.antenna_gain_dbi,
        antenna_gain_min_dbi: mbs.antenna_gain_dbi,
        half_power_beamwidth_deg: 360.0,
        aperture_deg: 180.0,
        capacity: mbs.capacity,
        position: Some(mbs_pos),
    });
    for id in 1..=maps.count {
        aps.push(AccessPointConfig {
            id,
            kind: ApKind::Map,
            band: maps.band,
            carrier_ghz: maps.carrier_ghz,
            tx_power_dbm: maps.tx_power_dbm,
            bandwidth_hz: maps.bandwidth_mhz * 1e6,
            antenna_gain_max_dbi: maps.gain_max_dbi,
            antenna_gain_min_dbi: maps.gain_min_dbi,
            half_power_beamwidth_deg: maps.half_power_beamwidth_deg,
            aperture_deg: maps.aperture_deg,
            capacity: maps.capacity,
            position: None,
        });
    }

    let mut placement_rng = rng::stream(config.rng_seed, streams::USERS);
    let users = match &users_cfg.positions_m {
        Some(positions) => {
            if positions.len() != users_cfg.count {
                return Err(schema(
                    "users.positions_m",
                    format!("{} positions given for {} users", positions.len(), users_cfg.count),
                ));
            }
            let mut users = Vec::with_capacity(positions.len());
            for (i, p) in positions.iter().enumerate() {
                let position = Vec3::new(p[0], p[1], 0.0);
                if !area.contains(&position) {
                    return Err(geometry(format!("users.positions_m[{i}]"), "user outside area"));
                }
                users.push(super::UserState { id: i, position, demand_bps: 0.0, qos_target: users_cfg.qos_target });
            }
            super::resample_demands(&mut users, &traffic, &mut placement_rng);
            users
        }
        None => super::spawn_users(&area, users_cfg.count, &traffic, users_cfg.qos_target, &mut placement_rng),
    };

    Ok(Scenario {
        name: config.name.clone(),
        area,
        aps,
        grid,
        users,
        horizon: config.horizon_steps,
        rng_seed: config.rng_seed,
        mobility: MobilityModel { step_length_m: config.mobility.step_length_m },
        traffic,
        channel: config.channel.clone(),
        cost: config.cost.clone(),
        max_deployed: maps.max_deployed,
        ue_antenna: UeAntenna { sub6_gain_dbi: users_cfg.sub6_gain_dbi, mmwave_gain_dbi: users_cfg.mmwave_gain_dbi },
        config,
    })
}
