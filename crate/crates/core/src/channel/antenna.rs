use crate::scenario::{AccessPointConfig, ApKind};

/// Transmit gain toward a direction `offset_deg` away from the beam axis.
///
/// The MBS radiates omnidirectionally at a constant gain. A MAP uses a
/// two-level sectored pattern: full gain inside half the half-power
/// beamwidth, the side-lobe level outside.
pub fn antenna_gain(ap: &AccessPointConfig, offset_deg: f64) -> f64 {
    match ap.kind {
        ApKind::Mbs => ap.antenna_gain_max_dbi,
        ApKind::Map => {
            if offset_deg.abs() <= ap.half_power_beamwidth_deg / 2.0 {
                ap.antenna_gain_max_dbi
            } else {
                ap.antenna_gain_min_dbi
            }
        }
    }
}
