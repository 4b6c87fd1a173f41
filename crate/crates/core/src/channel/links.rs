use rand::{Rng, RngCore};

use super::{
    expected_pathloss, los_probability_mmwave, los_probability_sub6, noise_dbm, pathloss_ground, pathloss_mmwave,
    pathloss_sub6, ChannelParams, LinkType, Shadowing,
};
use crate::scenario::{
    elevation_angle, in_coverage, AccessPointConfig, ApKind, Band, Scenario, UeAntenna, UserState, Vec3,
};

/// Links shorter than this are evaluated at this distance (far-field floor).
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SiteKind {
    Mbs,
    Grid(usize),
}

/// A transmitter position together with the radio profile used there.
#[derive(Clone, Debug)]
pub struct Site {
    pub kind: SiteKind,
    pub position: Vec3,
    pub ap: AccessPointConfig,
}

impl Site {
    pub fn mbs(scenario: &Scenario) -> Site {
        Site { kind: SiteKind::Mbs, position: scenario.mbs_position(), ap: scenario.mbs().clone() }
    }

    /// A MAP hovering at grid location `location`.
    ///
    /// # Panics
    /// If the scenario has no MAPs or `location` is out of range.
    pub fn grid(scenario: &Scenario, location: usize) -> Site {
        let template = scenario.map_template().expect("scenario has at least one MAP");
        Site { kind: SiteKind::Grid(location), position: scenario.grid[location].position, ap: template.clone() }
    }

    /// The MBS followed by every grid location, in id order.
    pub fn all(scenario: &Scenario) -> Vec<Site> {
        let mut sites = vec![Site::mbs(scenario)];
        if scenario.map_template().is_some() {
            sites.extend((0..scenario.grid.len()).map(|l| Site::grid(scenario, l)));
        }
        sites
    }
}

/// How random channel terms are resolved when a table is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Realization {
    /// LoS state and shadowing drawn once per link.
    Sampled,
    /// LoS-probability weighted path loss with mean shadowing.
    Expected,
}

/// Frozen propagation state of one site/UE pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub distance_m: f64,
    /// `None` for ground links, which have no LoS state.
    pub los_probability: Option<f64>,
    pub los: Option<bool>,
    pub pathloss_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    /// Received power with the main-lobe gain, in dBm.
    pub rss_dbm: f64,
    pub rss_mw: f64,
    /// Whether the UE lies in the site's coverage region.
    pub covered: bool,
    /// Unit vector from the transmitter to the UE.
    pub direction: Vec3,
    pub elevation_deg: f64,
    /// Azimuth of the transmitter seen from the UE, in degrees.
    pub aoa_deg: f64,
}

fn link_type(los: bool) -> LinkType {
    if los {
        LinkType::Los
    } else {
        LinkType::Nlos
    }
}

fn shadowing(realization: Realization, rng: &mut dyn RngCore) -> Shadowing<'_> {
    match realization {
        Realization::Sampled => Shadowing::Draw(rng),
        Realization::Expected => Shadowing::Mean,
    }
}

/// Evaluates the path loss of one link under `realization`.
fn propagate(
    ap: &AccessPointConfig,
    tx: Vec3,
    ue: Vec3,
    distance: f64,
    channel: &ChannelParams,
    realization: Realization,
    rng: &mut dyn RngCore,
) -> (f64, Option<f64>, Option<bool>) {
    let valid = "distance and carrier validated positive";
    match (ap.kind, ap.band) {
        (ApKind::Mbs, _) => {
            let pl =
                pathloss_ground(distance, ap.carrier_ghz, &channel.ground, shadowing(realization, rng)).expect(valid);
            (pl, None, None)
        }
        (ApKind::Map, Band::Sub6) => {
            let p = los_probability_sub6(elevation_angle(ue, tx), &channel.sub6_air);
            let f_mhz = ap.carrier_ghz * 1e3;
            resolve_los(p, realization, rng, |t, rng| {
                pathloss_sub6(distance, f_mhz, t, &channel.sub6_air, shadowing(realization, rng)).expect(valid)
            })
        }
        (ApKind::Map, Band::Mmwave) => {
            let p = los_probability_mmwave(distance, tx.z, ue.z, &channel.mmwave_air);
            resolve_los(p, realization, rng, |t, rng| {
                pathloss_mmwave(distance, t, &channel.mmwave_air, shadowing(realization, rng)).expect(valid)
            })
        }
    }
}

fn resolve_los(
    p: f64,
    realization: Realization,
    rng: &mut dyn RngCore,
    model: impl Fn(LinkType, &mut dyn RngCore) -> f64,
) -> (f64, Option<f64>, Option<bool>) {
    match realization {
        Realization::Sampled => {
            let los = rng.random::<f64>() < p;
            (model(link_type(los), rng), Some(p), Some(los))
        }
        Realization::Expected => {
            let pl = expected_pathloss(p, model(LinkType::Los, rng), model(LinkType::Nlos, rng));
            (pl, Some(p), Some(p >= 0.5))
        }
    }
}

/// Propagation state of every (site, UE) pair at one instant.
#[derive(Clone, Debug)]
pub struct LinkTable {
    sites: Vec<Site>,
    n_users: usize,
    links: Vec<Link>,
    noise_density_dbm_hz: f64,
}

impl LinkTable {
    /// Evaluates every link. Random draws happen site-major, UE-minor, so the
    /// table is a pure function of the inputs and the generator state.
    pub fn build<R: Rng>(
        channel: &ChannelParams,
        ue_antenna: &UeAntenna,
        sites: Vec<Site>,
        users: &[UserState],
        realization: Realization,
        rng: &mut R,
    ) -> LinkTable {
        let mut links = Vec::with_capacity(sites.len() * users.len());
        for site in &sites {
            let ap = &site.ap;
            for ue in users {
                let tx = site.position;
                let rx = ue.position;
                let distance = tx.distance(&rx).max(MIN_LINK_DISTANCE_M);
                let (pathloss_db, los_probability, los) =
                    propagate(ap, tx, rx, distance, channel, realization, &mut *rng);
                let rx_gain_dbi = ue_antenna.gain(ap.band);
                let tx_gain_dbi = ap.antenna_gain_max_dbi;
                let rss_dbm = ap.tx_power_dbm + tx_gain_dbi + rx_gain_dbi - pathloss_db;
                let covered = match ap.kind {
                    ApKind::Mbs => true,
                    ApKind::Map => in_coverage(tx, ap.aperture_deg, rx),
                };
                let direction = rx.sub(&tx).normalized();
                links.push(Link {
                    distance_m: distance,
                    los_probability,
                    los,
                    pathloss_db,
                    tx_gain_dbi,
                    rx_gain_dbi,
                    rss_dbm,
                    rss_mw: super::db_to_linear(rss_dbm),
                    covered,
                    direction,
                    elevation_deg: elevation_angle(rx, tx),
                    aoa_deg: (tx.y - rx.y).atan2(tx.x - rx.x).to_degrees(),
                });
            }
        }
        LinkTable { sites, n_users: users.len(), links, noise_density_dbm_hz: channel.noise_density_dbm_hz }
    }

    /// Convenience constructor using the scenario's channel and UE antennas.
    pub fn for_scenario<R: Rng>(
        scenario: &Scenario,
        sites: Vec<Site>,
        users: &[UserState],
        realization: Realization,
        rng: &mut R,
    ) -> LinkTable {
        LinkTable::build(&scenario.channel, &scenario.ue_antenna, sites, users, realization, rng)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn link(&self, site: usize, ue: usize) -> &Link {
        &self.links[site * self.n_users + ue]
    }

    pub fn noise_density_dbm_hz(&self) -> f64 {
        self.noise_density_dbm_hz
    }

    /// Noise power over `bandwidth_hz`, in mW.
    pub fn noise_mw(&self, bandwidth_hz: f64) -> f64 {
        super::db_to_linear(noise_dbm(self.noise_density_dbm_hz, bandwidth_hz))
    }

    /// Full-bandwidth SNR of a site/UE pair in dB, `None` when the UE is not
    /// covered.
    pub fn snr_db(&self, site: usize, ue: usize) -> Option<f64> {
        let link = self.link(site, ue);
        link.covered.then(|| link.rss_dbm - noise_dbm(self.noise_density_dbm_hz, self.sites[site].ap.bandwidth_hz))
    }
}
