//! Propagation models, link budgets, SINR and Shannon rates.
//!
//! Three families of links exist:
//!
//! * air/ground sub-6 GHz: elevation-dependent LoS probability with a
//!   free-space style path loss plus per-link-type excess loss,
//! * air/ground mm-wave: building-crossing LoS probability with an
//!   `alpha + 10 beta log10(d)` path loss,
//! * ground/ground (the MBS): alpha-beta-gamma path loss, no LoS state.
//!
//! With [`Shadowing::Off`] every path-loss function is a closed form.

mod antenna;
mod links;
mod radio;

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::DomainError;

pub use antenna::antenna_gain;
pub use links::{Link, LinkTable, Realization, Site, SiteKind};
pub use radio::{compute_radio_state, LinkBudget, LinkQuality, LinkState, RadioContext, RadioState, Transmitter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkType {
    Los,
    Nlos,
}

/// How the shadowing term of a path-loss model is resolved.
pub enum Shadowing<'a> {
    /// chi = 0.
    Off,
    /// chi = its mean.
    Mean,
    /// chi ~ Normal(mean, std).
    Draw(&'a mut dyn RngCore),
}

impl Shadowing<'_> {
    fn resolve(&mut self, mean: f64, std: f64) -> f64 {
        match self {
            Shadowing::Off => 0.0,
            Shadowing::Mean => mean,
            Shadowing::Draw(rng) => {
                if std == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std).expect("validated std").sample(&mut **rng)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sub6AirParams {
    pub c: f64,
    pub d: f64,
    pub theta0_deg: f64,
    pub los_shadow_mean_db: f64,
    pub nlos_shadow_mean_db: f64,
    pub los_shadow_std_db: f64,
    pub nlos_shadow_std_db: f64,
}

impl Default for Sub6AirParams {
    fn default() -> Self {
        Sub6AirParams {
            c: 0.6,
            d: 0.11,
            theta0_deg: 15.0,
            los_shadow_mean_db: 1.0,
            nlos_shadow_mean_db: 20.0,
            los_shadow_std_db: 3.0,
            nlos_shadow_std_db: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmwaveAirParams {
    pub epsilon: f64,
    /// Buildings crossed per metre of link; gamma(d) = floor(density * d).
    pub building_density_per_m: f64,
    pub los_alpha_db: f64,
    pub los_beta: f64,
    pub nlos_alpha_db: f64,
    pub nlos_beta: f64,
    pub los_shadow_std_db: f64,
    pub nlos_shadow_std_db: f64,
}

impl Default for MmwaveAirParams {
    fn default() -> Self {
        MmwaveAirParams {
            epsilon: 15.0,
            building_density_per_m: 0.01,
            los_alpha_db: 61.4,
            los_beta: 2.0,
            nlos_alpha_db: 72.0,
            nlos_beta: 2.92,
            los_shadow_std_db: 12f64.sqrt(),
            nlos_shadow_std_db: 12f64.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundParams {
    pub alpha: f64,
    pub beta_db: f64,
    pub gamma: f64,
    pub shadow_std_db: f64,
}

impl Default for GroundParams {
    fn default() -> Self {
        GroundParams { alpha: 3.4, beta_db: 19.2, gamma: 2.3, shadow_std_db: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub noise_density_dbm_hz: f64,
    #[serde(default)]
    pub sub6_air: Sub6AirParams,
    #[serde(default)]
    pub mmwave_air: MmwaveAirParams,
    #[serde(default)]
    pub ground: GroundParams,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            noise_density_dbm_hz: -174.0,
            sub6_air: Sub6AirParams::default(),
            mmwave_air: MmwaveAirParams::default(),
            ground: GroundParams::default(),
        }
    }
}

impl ChannelParams {
    pub(crate) fn validate(&self) -> Result<(), (String, String)> {
        let finite = [
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
            ("sub6_air.c", self.sub6_air.c),
            ("sub6_air.d", self.sub6_air.d),
            ("sub6_air.theta0_deg", self.sub6_air.theta0_deg),
            ("sub6_air.los_shadow_mean_db", self.sub6_air.los_shadow_mean_db),
            ("sub6_air.nlos_shadow_mean_db", self.sub6_air.nlos_shadow_mean_db),
            ("mmwave_air.los_alpha_db", self.mmwave_air.los_alpha_db),
            ("mmwave_air.los_beta", self.mmwave_air.los_beta),
            ("mmwave_air.nlos_alpha_db", self.mmwave_air.nlos_alpha_db),
            ("mmwave_air.nlos_beta", self.mmwave_air.nlos_beta),
            ("ground.alpha", self.ground.alpha),
            ("ground.beta_db", self.ground.beta_db),
            ("ground.gamma", self.ground.gamma),
        ];
        for (path, v) in finite {
            if !v.is_finite() {
                return Err((path.into(), format!("must be finite, got {v}")));
            }
        }
        let non_negative = [
            ("sub6_air.los_shadow_std_db", self.sub6_air.los_shadow_std_db),
            ("sub6_air.nlos_shadow_std_db", self.sub6_air.nlos_shadow_std_db),
            ("mmwave_air.building_density_per_m", self.mmwave_air.building_density_per_m),
            ("mmwave_air.los_shadow_std_db", self.mmwave_air.los_shadow_std_db),
            ("mmwave_air.nlos_shadow_std_db", self.mmwave_air.nlos_shadow_std_db),
            ("ground.shadow_std_db", self.ground.shadow_std_db),
        ];
        for (path, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err((path.into(), format!("must be non-negative, got {v}")));
            }
        }
        if !(self.mmwave_air.epsilon.is_finite() && self.mmwave_air.epsilon > 0.0) {
            return Err(("mmwave_air.epsilon".into(), "must be positive".into()));
        }
        Ok(())
    }
}

fn require_positive(quantity: &'static str, value: f64) -> Result<(), DomainError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(DomainError::NonPositive { quantity, value })
    }
}

/// LoS probability of an air/ground sub-6 GHz link at elevation `theta_deg`.
/// Zero below `theta0`.
pub fn los_probability_sub6(theta_deg: f64, params: &Sub6AirParams) -> f64 {
    if theta_deg < params.theta0_deg {
        return 0.0;
    }
    (params.c * (theta_deg - params.theta0_deg).powf(params.d)).clamp(0.0, 1.0)
}

/// Air/ground sub-6 GHz path loss; `f_mhz` in MHz.
pub fn pathloss_sub6(
    d_m: f64,
    f_mhz: f64,
    link: LinkType,
    params: &Sub6AirParams,
    mut shadowing: Shadowing<'_>,
) -> Result<f64, DomainError> {
    require_positive("distance", d_m)?;
    require_positive("carrier frequency", f_mhz)?;
    let (mean, std) = match link {
        LinkType::Los => (params.los_shadow_mean_db, params.los_shadow_std_db),
        LinkType::Nlos => (params.nlos_shadow_mean_db, params.nlos_shadow_std_db),
    };
    Ok(20.0 * d_m.log10() + 20.0 * f_mhz.log10() - 27.55 + shadowing.resolve(mean, std))
}

/// Number of buildings crossed by a link of length `d_m`.
pub fn buildings_crossed(d_m: f64, params: &MmwaveAirParams) -> u64 {
    (params.building_density_per_m * d_m).floor().max(0.0) as u64
}

/// LoS probability of an air/ground mm-wave link from building crossings.
///
/// Each factor of the product is clamped to `[0, 1]`. With no building on
/// the path the link is LoS with certainty.
pub fn los_probability_mmwave(d_m: f64, h_t: f64, h_r: f64, params: &MmwaveAirParams) -> f64 {
    let crossings = buildings_crossed(d_m, params);
    if crossings == 0 {
        return 1.0;
    }
    let gamma = crossings as f64;
    let top = h_t.max(h_r);
    let dh2 = (h_t - h_r).abs().powi(2);
    let denom = 2.0 * params.epsilon.powi(2) * gamma * gamma;
    let mut p = 1.0;
    for n in 0..=crossings {
        let numerator = gamma * top - (n as f64 + 0.5) * dh2;
        p *= (1.0 - (-numerator / denom).exp()).clamp(0.0, 1.0);
        if p == 0.0 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Air/ground mm-wave path loss.
pub fn pathloss_mmwave(
    d_m: f64,
    link: LinkType,
    params: &MmwaveAirParams,
    mut shadowing: Shadowing<'_>,
) -> Result<f64, DomainError> {
    require_positive("distance", d_m)?;
    let (alpha, beta, std) = match link {
        LinkType::Los => (params.los_alpha_db, params.los_beta, params.los_shadow_std_db),
        LinkType::Nlos => (params.nlos_alpha_db, params.nlos_beta, params.nlos_shadow_std_db),
    };
    Ok(alpha + 10.0 * beta * d_m.log10() + shadowing.resolve(0.0, std))
}

/// Ground/ground alpha-beta-gamma path loss; `f_ghz` in GHz.
pub fn pathloss_ground(
    d_m: f64,
    f_ghz: f64,
    params: &GroundParams,
    mut shadowing: Shadowing<'_>,
) -> Result<f64, DomainError> {
    require_positive("distance", d_m)?;
    require_positive("carrier frequency", f_ghz)?;
    Ok(10.0 * params.alpha * d_m.log10()
        + params.beta_db
        + 10.0 * params.gamma * f_ghz.log10()
        + shadowing.resolve(0.0, params.shadow_std_db))
}

/// LoS-weighted path loss, averaged in dB.
pub fn expected_pathloss(p: f64, pl_los_db: f64, pl_nlos_db: f64) -> f64 {
    p * pl_los_db + (1.0 - p) * pl_nlos_db
}

pub fn shannon_rate(bandwidth_hz: f64, sinr_linear: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr_linear.max(0.0)).log2()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.max(1e-300).log10()
}

/// Thermal noise power over `bandwidth_hz`, in dBm.
pub fn noise_dbm(noise_density_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    noise_density_dbm_hz + 10.0 * bandwidth_hz.log10()
}
