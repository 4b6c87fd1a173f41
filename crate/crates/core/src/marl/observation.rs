//! Per-agent observations.
//!
//! Local part (`3 + 2|A|` features):
//!
//! * the previous network utility `R_alpha(t-1)`, per user and divided by the
//!   utility of the mean demand;
//! * RSS toward every access point of the fleet (dBm / 100). Access points
//!   that are not on air or do not cover the user read as the RSS floor;
//! * angle of arrival toward every access point (degrees / 180, 0 when not
//!   on air);
//! * the user's own rate in the previous step and its current demand, both
//!   divided by the mean demand.
//!
//! Global part: for each of the `n_neighbors` nearest other users (ties:
//! lower id) its position divided by the cell width and its previous request
//! as `(a + 1) / |A|` (0 before the first request). Missing neighbours are
//! zero-padded and flagged in [`Observation::neighbor_mask`].

use serde::{Deserialize, Serialize};

use crate::association::alpha_fair_utility;
use crate::channel::LinkTable;
use crate::scenario::{Scenario, UserState};

/// Feature dimensions for a fleet of `n_aps` access points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationLayout {
    pub n_aps: usize,
    pub n_neighbors: usize,
}

impl ObservationLayout {
    pub const NEIGHBOR_FEATURES: usize = 4;

    pub fn local_dim(&self) -> usize {
        3 + 2 * self.n_aps
    }

    pub fn dim(&self) -> usize {
        self.local_dim() + Self::NEIGHBOR_FEATURES * self.n_neighbors
    }
}

/// Constants that bring raw features to a comparable scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScales {
    pub rss_floor_dbm: f64,
    pub rss_per_dbm: f64,
    pub aoa_per_deg: f64,
    pub rate_per_bps: f64,
    pub position_per_m: f64,
    /// Divides the per-user network utility.
    pub utility_per_user: f64,
}

impl FeatureScales {
    pub fn for_scenario(scenario: &Scenario, alpha: f64) -> FeatureScales {
        let mean_demand = scenario.traffic.mean_demand_bps.max(1.0);
        let reference = alpha_fair_utility(mean_demand, alpha).map_or(1.0, f64::abs);
        FeatureScales {
            rss_floor_dbm: -150.0,
            rss_per_dbm: 0.01,
            aoa_per_deg: 1.0 / 180.0,
            rate_per_bps: 1.0 / mean_demand,
            position_per_m: 1.0 / scenario.area.width_m.max(scenario.area.height_m),
            utility_per_user: if reference > 1e-12 { reference } else { 1.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub features: Vec<f64>,
    pub neighbor_mask: Vec<bool>,
}

/// Everything the observation of one step is built from.
#[derive(Clone, Copy, Debug)]
pub struct ObservationContext<'a> {
    pub users: &'a [UserState],
    pub links: &'a LinkTable,
    /// Link-table site of each access point id, `None` when not on air.
    pub site_of_ap: &'a [Option<usize>],
    pub previous_actions: &'a [Option<usize>],
    pub previous_rates_bps: &'a [f64],
    pub previous_utility: f64,
}

/// The `n` users nearest to `ue` (Euclidean, ties: lower id).
pub fn nearest_neighbors(users: &[UserState], ue: usize, n: usize) -> Vec<usize> {
    let me = users[ue].position;
    let mut others: Vec<(f64, usize)> =
        users.iter().enumerate().filter(|(k, _)| *k != ue).map(|(k, u)| (u.position.distance(&me), k)).collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(n).map(|(_, k)| k).collect()
}

pub fn build_observation(
    ue: usize,
    ctx: &ObservationContext<'_>,
    layout: &ObservationLayout,
    scales: &FeatureScales,
) -> Observation {
    assert_eq!(ctx.site_of_ap.len(), layout.n_aps, "one site entry per access point");
    let n_users = ctx.users.len();
    let mut f = Vec::with_capacity(layout.dim());
    f.push(ctx.previous_utility / (n_users.max(1) as f64 * scales.utility_per_user));
    let mut aoa = Vec::with_capacity(layout.n_aps);
    for site in ctx.site_of_ap {
        match site {
            Some(s) => {
                let link = ctx.links.link(*s, ue);
                let rss = if link.covered { link.rss_dbm.max(scales.rss_floor_dbm) } else { scales.rss_floor_dbm };
                f.push(rss * scales.rss_per_dbm);
                aoa.push(link.aoa_deg * scales.aoa_per_deg);
            }
            None => {
                f.push(scales.rss_floor_dbm * scales.rss_per_dbm);
                aoa.push(0.0);
            }
        }
    }
    f.extend(aoa);
    f.push(ctx.previous_rates_bps[ue] * scales.rate_per_bps);
    f.push(ctx.users[ue].demand_bps * scales.rate_per_bps);

    let neighbors = nearest_neighbors(ctx.users, ue, layout.n_neighbors);
    let mut mask = vec![false; layout.n_neighbors];
    for slot in 0..layout.n_neighbors {
        match neighbors.get(slot) {
            Some(&k) => {
                let p = ctx.users[k].position;
                let action = ctx.previous_actions[k].map_or(0.0, |a| (a + 1) as f64 / layout.n_aps as f64);
                f.extend([
                    p.x * scales.position_per_m,
                    p.y * scales.position_per_m,
                    p.z * scales.position_per_m,
                    action,
                ]);
                mask[slot] = true;
            }
            None => f.extend([0.0; ObservationLayout::NEIGHBOR_FEATURES]),
        }
    }
    debug_assert_eq!(f.len(), layout.dim());
    Observation { features: f, neighbor_mask: mask }
}
