use std::f64::consts::FRAC_PI_2;

use super::Vec3;

/// Elevation of `ap` seen from `ue`, in degrees. Directly overhead is 90°.
pub fn elevation_angle(ue: Vec3, ap: Vec3) -> f64 {
    let horizontal = ue.horizontal_distance(&ap);
    if horizontal == 0.0 {
        return 90.0;
    }
    (ap.z - ue.z).atan2(horizontal).to_degrees()
}

/// Whether `ue` lies in the downward cone of full angle `aperture_deg` below
/// a MAP at `map_position`.
pub fn in_coverage(map_position: Vec3, aperture_deg: f64, ue: Vec3) -> bool {
    let horizontal = ue.horizontal_distance(&map_position);
    if horizontal <= 1e-9 {
        return true;
    }
    let drop = map_position.z - ue.z;
    if drop <= 0.0 {
        return false;
    }
    let half = (aperture_deg / 2.0).to_radians();
    if half >= FRAC_PI_2 {
        return true;
    }
    horizontal <= drop * half.tan()
}
