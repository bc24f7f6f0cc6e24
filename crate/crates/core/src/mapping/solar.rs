//! Solar azimuth via the NOAA solar-position formulation.
//!
//! Accuracy is a few hundredths of a degree in the 1950–2050 range, well
//! inside the 0.5° the dance-to-field translation needs.

use chrono::{DateTime, Timelike, Utc};

fn julian_day(utc: DateTime<Utc>) -> f64 {
    // Unix epoch is JD 2440587.5.
    utc.timestamp() as f64 / 86400.0 + f64::from(utc.nanosecond()) / 86400.0e9 + 2_440_587.5
}

/// Solar azimuth in degrees clockwise from true north.
pub fn solar_azimuth(lat_deg: f64, lon_deg: f64, utc: DateTime<Utc>) -> f64 {
    solar_position(lat_deg, lon_deg, utc).0
}

/// Solar elevation in degrees above the horizon (no refraction correction).
pub fn solar_elevation(lat_deg: f64, lon_deg: f64, utc: DateTime<Utc>) -> f64 {
    solar_position(lat_deg, lon_deg, utc).1
}

/// `(azimuth, elevation)` in degrees.
pub fn solar_position(lat_deg: f64, lon_deg: f64, utc: DateTime<Utc>) -> (f64, f64) {
    let jd = julian_day(utc);
    let jc = (jd - 2_451_545.0) / 36_525.0;

    let geom_mean_long = (280.46646 + jc * (36_000.76983 + jc * 0.000_303_2)).rem_euclid(360.0);
    let geom_mean_anom = 357.52911 + jc * (35_999.05029 - 0.000_153_7 * jc);
    let eccentricity = 0.016_708_634 - jc * (0.000_042_037 + 0.000_000_126_7 * jc);

    let m = geom_mean_anom.to_radians();
    let eq_of_center = m.sin() * (1.914_602 - jc * (0.004_817 + 0.000_014 * jc))
        + (2.0 * m).sin() * (0.019_993 - 0.000_101 * jc)
        + (3.0 * m).sin() * 0.000_289;

    let true_long = geom_mean_long + eq_of_center;
    let omega = (125.04 - 1_934.136 * jc).to_radians();
    let apparent_long = true_long - 0.005_69 - 0.004_78 * omega.sin();

    let mean_obliq = 23.0
        + (26.0 + (21.448 - jc * (46.815 + jc * (0.000_59 - jc * 0.001_813))) / 60.0) / 60.0;
    let obliq_corr = mean_obliq + 0.002_56 * omega.cos();

    let decl = (obliq_corr.to_radians().sin() * apparent_long.to_radians().sin())
        .asin();

    let var_y = (obliq_corr / 2.0).to_radians().tan().powi(2);
    let l0 = geom_mean_long.to_radians();
    let eq_time_min = 4.0
        * (var_y * (2.0 * l0).sin() - 2.0 * eccentricity * m.sin()
            + 4.0 * eccentricity * var_y * m.sin() * (2.0 * l0).cos()
            - 0.5 * var_y * var_y * (4.0 * l0).sin()
            - 1.25 * eccentricity * eccentricity * (2.0 * m).sin())
        .to_degrees();

    let minutes_utc = f64::from(utc.num_seconds_from_midnight()) / 60.0
        + f64::from(utc.nanosecond()) / 60.0e9;
    let true_solar_min = (minutes_utc + eq_time_min + 4.0 * lon_deg).rem_euclid(1_440.0);
    let hour_angle_deg = if true_solar_min / 4.0 < 0.0 {
        true_solar_min / 4.0 + 180.0
    } else {
        true_solar_min / 4.0 - 180.0
    };

    let lat = lat_deg.to_radians();
    let ha = hour_angle_deg.to_radians();
    let cos_zenith = lat.sin() * decl.sin() + lat.cos() * decl.cos() * ha.cos();
    let zenith = cos_zenith.clamp(-1.0, 1.0).acos();
    let elevation = 90.0 - zenith.to_degrees();

    let sin_zenith = zenith.sin();
    let azimuth = if sin_zenith.abs() < 1e-9 {
        // Sun at the zenith/nadir: azimuth is undefined; report 0.
        0.0
    } else {
        let cos_az = ((lat.sin() * cos_zenith - decl.sin()) / (lat.cos() * sin_zenith))
            .clamp(-1.0, 1.0);
        if hour_angle_deg > 0.0 {
            (cos_az.acos().to_degrees() + 180.0).rem_euclid(360.0)
        } else {
            (540.0 - cos_az.acos().to_degrees()).rem_euclid(360.0)
        }
    };
    (azimuth, elevation)
}
