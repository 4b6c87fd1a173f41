//! SINR and rate evaluation for one association over a [`LinkTable`].
//!
//! Resource model:
//!
//! * The MBS shares its bandwidth equally among its users (OFDMA), so its
//!   users see no intra-cell interference.
//! * Each MAP serves every user with a dedicated beam over the full MAP
//!   bandwidth. A user in a MAP's coverage cone receives every other beam of
//!   that MAP (intra-cell) and of every other MAP (inter-cell), weighted by
//!   the two-level antenna pattern toward the user.
//! * Different bands do not interfere.
//!
//! For a user that is not served by an access point, the same formulas give
//! the rate it would get if it joined (the bandwidth share counts it in).

use super::{linear_to_db, shannon_rate, LinkTable};
use crate::scenario::{ApKind, Band};

/// An access point on air, located at a site of the link table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transmitter {
    pub ap_id: usize,
    pub site: usize,
}

/// What an association policy needs to know about the radio environment.
pub trait LinkQuality {
    /// Number of access points on air (slots).
    fn n_slots(&self) -> usize;
    fn n_users(&self) -> usize;
    fn slot_ap_id(&self, slot: usize) -> usize;
    fn slot_capacity(&self, slot: usize) -> usize;
    /// Full-bandwidth SNR in dB; `None` if the user is outside coverage.
    fn snr_db(&self, slot: usize, ue: usize) -> Option<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMetrics {
    pub sinr_linear: f64,
    pub interference_mw: f64,
    pub bandwidth_hz: f64,
    pub rate_bps: f64,
}

/// Precomputed per-transmitter constants over a link table.
#[derive(Clone, Debug)]
pub struct RadioContext<'a> {
    links: &'a LinkTable,
    txs: &'a [Transmitter],
    slot_of_ap: Vec<Option<usize>>,
    noise_full_mw: Vec<f64>,
    cos_half_beam: Vec<f64>,
    side_lobe_ratio: Vec<f64>,
}

impl<'a> RadioContext<'a> {
    pub fn new(links: &'a LinkTable, txs: &'a [Transmitter]) -> Self {
        let max_id = txs.iter().map(|t| t.ap_id).max().map_or(0, |m| m + 1);
        let mut slot_of_ap = vec![None; max_id];
        for (slot, t) in txs.iter().enumerate() {
            assert!(slot_of_ap[t.ap_id].is_none(), "access point {} on air twice", t.ap_id);
            slot_of_ap[t.ap_id] = Some(slot);
        }
        let ap = |t: &Transmitter| &links.sites()[t.site].ap;
        RadioContext {
            links,
            txs,
            slot_of_ap,
            noise_full_mw: txs.iter().map(|t| links.noise_mw(ap(t).bandwidth_hz)).collect(),
            cos_half_beam: txs
                .iter()
                .map(|t| (ap(t).half_power_beamwidth_deg / 2.0).min(180.0).to_radians().cos())
                .collect(),
            side_lobe_ratio: txs
                .iter()
                .map(|t| super::db_to_linear(ap(t).antenna_gain_min_dbi - ap(t).antenna_gain_max_dbi))
                .collect(),
        }
    }

    pub fn links(&self) -> &LinkTable {
        self.links
    }

    pub fn transmitters(&self) -> &[Transmitter] {
        self.txs
    }

    pub fn slot(&self, ap_id: usize) -> Option<usize> {
        self.slot_of_ap.get(ap_id).copied().flatten()
    }

    fn kind(&self, slot: usize) -> ApKind {
        self.links.sites()[self.txs[slot].site].ap.kind
    }

    fn band(&self, slot: usize) -> Band {
        self.links.sites()[self.txs[slot].site].ap.band
    }

    fn bandwidth(&self, slot: usize) -> f64 {
        self.links.sites()[self.txs[slot].site].ap.bandwidth_hz
    }

    /// Users served by each slot, from a serving vector indexed by UE and
    /// holding access-point ids.
    ///
    /// # Panics
    /// If a user is served by an access point that is not on air.
    pub fn served_lists(&self, serving: &[Option<usize>]) -> Vec<Vec<usize>> {
        let mut served = vec![Vec::new(); self.txs.len()];
        for (ue, ap) in serving.iter().enumerate() {
            if let Some(ap) = ap {
                let slot = self.slot(*ap).unwrap_or_else(|| panic!("UE {ue} served by access point {ap} not on air"));
                served[slot].push(ue);
            }
        }
        served
    }

    /// SINR, bandwidth and rate of user `ue` on `slot` given the served lists.
    pub fn pair(&self, slot: usize, ue: usize, served: &[Vec<usize>]) -> PairMetrics {
        let link = self.links.link(self.txs[slot].site, ue);
        let joined = served[slot].contains(&ue);
        let bandwidth_hz = match self.kind(slot) {
            ApKind::Mbs => {
                let sharers = served[slot].len() + usize::from(!joined);
                self.bandwidth(slot) / sharers as f64
            }
            ApKind::Map => self.bandwidth(slot),
        };
        let band = self.band(slot);
        let mut interference_mw = 0.0;
        for (m, t) in self.txs.iter().enumerate() {
            if self.band(m) != band || served[m].is_empty() {
                continue;
            }
            let victim = self.links.link(t.site, ue);
            match self.kind(m) {
                ApKind::Mbs => {
                    if m != slot {
                        interference_mw += victim.rss_mw;
                    }
                }
                ApKind::Map => {
                    if !victim.covered {
                        continue;
                    }
                    for &other in &served[m] {
                        if m == slot && other == ue {
                            continue;
                        }
                        let beam = self.links.link(t.site, other).direction;
                        let gain = if beam.dot(&victim.direction) >= self.cos_half_beam[m] {
                            1.0
                        } else {
                            self.side_lobe_ratio[m]
                        };
                        interference_mw += victim.rss_mw * gain;
                    }
                }
            }
        }
        let noise_mw = self.noise_full_mw[slot] * bandwidth_hz / self.bandwidth(slot);
        let sinr_linear = link.rss_mw / (noise_mw + interference_mw);
        let rate_bps = if link.covered { shannon_rate(bandwidth_hz, sinr_linear) } else { 0.0 };
        PairMetrics { sinr_linear, interference_mw, bandwidth_hz, rate_bps }
    }

    /// Rate of every user under `serving`; unserved users get 0.
    pub fn serving_rates(&self, serving: &[Option<usize>]) -> Vec<f64> {
        let served = self.served_lists(serving);
        serving
            .iter()
            .enumerate()
            .map(|(ue, ap)| match ap {
                Some(ap) => self.pair(self.slot(*ap).expect("checked by served_lists"), ue, &served).rate_bps,
                None => 0.0,
            })
            .collect()
    }
}

impl LinkQuality for RadioContext<'_> {
    fn n_slots(&self) -> usize {
        self.txs.len()
    }

    fn n_users(&self) -> usize {
        self.links.n_users()
    }

    fn slot_ap_id(&self, slot: usize) -> usize {
        self.txs[slot].ap_id
    }

    fn slot_capacity(&self, slot: usize) -> usize {
        self.links.sites()[self.txs[slot].site].ap.capacity
    }

    fn snr_db(&self, slot: usize, ue: usize) -> Option<f64> {
        self.links.snr_db(self.txs[slot].site, ue)
    }
}

/// Link budget terms of one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub los: Option<bool>,
    pub pathloss_db: f64,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub rss_dbm: f64,
    pub aoa_deg: f64,
}

/// Full radio state of one access-point/user pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkState {
    pub budget: LinkBudget,
    pub covered: bool,
    pub associated: bool,
    pub snr_db: f64,
    pub sinr_db: f64,
    pub bandwidth_hz: f64,
    pub rate_bps: f64,
}

/// Radio state of every on-air access point toward every user.
#[derive(Clone, Debug)]
pub struct RadioState {
    pub transmitters: Vec<Transmitter>,
    pub ap_kinds: Vec<ApKind>,
    pub capacities: Vec<usize>,
    pub n_users: usize,
    entries: Vec<LinkState>,
}

impl RadioState {
    pub fn n_slots(&self) -> usize {
        self.transmitters.len()
    }

    pub fn get(&self, slot: usize, ue: usize) -> &LinkState {
        &self.entries[slot * self.n_users + ue]
    }

    pub fn slot(&self, ap_id: usize) -> Option<usize> {
        self.transmitters.iter().position(|t| t.ap_id == ap_id)
    }

    /// Rate each user actually receives (0 when unassociated).
    pub fn served_rates(&self) -> Vec<f64> {
        (0..self.n_users)
            .map(|ue| (0..self.n_slots()).map(|s| self.get(s, ue)).find(|l| l.associated).map_or(0.0, |l| l.rate_bps))
            .collect()
    }
}

impl LinkQuality for RadioState {
    fn n_slots(&self) -> usize {
        self.transmitters.len()
    }

    fn n_users(&self) -> usize {
        self.n_users
    }

    fn slot_ap_id(&self, slot: usize) -> usize {
        self.transmitters[slot].ap_id
    }

    fn slot_capacity(&self, slot: usize) -> usize {
        self.capacities[slot]
    }

    fn snr_db(&self, slot: usize, ue: usize) -> Option<f64> {
        let l = self.get(slot, ue);
        l.covered.then_some(l.snr_db)
    }
}

/// Evaluates every on-air pair under the association `serving`
/// (UE-indexed, access-point ids).
pub fn compute_radio_state(links: &LinkTable, txs: &[Transmitter], serving: &[Option<usize>]) -> RadioState {
    assert_eq!(serving.len(), links.n_users(), "serving vector must cover every UE");
    let ctx = RadioContext::new(links, txs);
    let served = ctx.served_lists(serving);
    let mut entries = Vec::with_capacity(txs.len() * links.n_users());
    for (slot, t) in txs.iter().enumerate() {
        let ap = &links.sites()[t.site].ap;
        let noise = super::noise_dbm(links.noise_density_dbm_hz(), ap.bandwidth_hz);
        for ue in 0..links.n_users() {
            let link = links.link(t.site, ue);
            let m = ctx.pair(slot, ue, &served);
            entries.push(LinkState {
                budget: LinkBudget {
                    distance_m: link.distance_m,
                    los: link.los,
                    pathloss_db: link.pathloss_db,
                    tx_power_dbm: ap.tx_power_dbm,
                    tx_gain_dbi: link.tx_gain_dbi,
                    rx_gain_dbi: link.rx_gain_dbi,
                    rss_dbm: link.rss_dbm,
                    aoa_deg: link.aoa_deg,
                },
                covered: link.covered,
                associated: serving[ue] == Some(t.ap_id),
                snr_db: link.rss_dbm - noise,
                sinr_db: linear_to_db(m.sinr_linear),
                bandwidth_hz: m.bandwidth_hz,
                rate_bps: m.rate_bps,
            });
        }
    }
    RadioState {
        transmitters: txs.to_vec(),
        ap_kinds: txs.iter().map(|t| links.sites()[t.site].ap.kind).collect(),
        capacities: txs.iter().map(|t| links.sites()[t.site].ap.capacity).collect(),
        n_users: links.n_users(),
        entries,
    }
}
