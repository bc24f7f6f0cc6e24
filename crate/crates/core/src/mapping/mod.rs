//! Grouping waggle runs into dances and translating them to the field.
//!
//! Runs are clustered in XYT space (comb position plus time in
//! quarter-seconds since local midnight) with single-linkage HAC cut at
//! `d_max3`. Within each cluster, RANSAC over the run directions removes
//! angular outliers (mostly 180° disambiguation flips); the surviving runs
//! are averaged and translated to a field vector: duration → distance via
//! the linear calibration factor, direction → bearing via the solar
//! azimuth at the dance's mid-time.

pub mod export;
pub mod geo;
mod ransac;
pub mod solar;

pub use export::{export_geojson, export_svg};
pub use ransac::{ransac_angles, RansacConfig};

use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circular::{circular_mean, wrap360};
use crate::hac::cluster_threshold;
use crate::records::RunRecord;

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("invalid mapping config: {0}")]
    InvalidConfig(String),
    #[error("calibration needs at least {need} runs, got {got}")]
    TooFewRuns { got: usize, need: usize },
    #[error("cluster has no strong direction mode")]
    NoStrongMode,
    #[error("mean direction undefined for cluster")]
    UndefinedMean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HiveConfig {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Offset applied to timestamps to obtain local time (hours).
    pub utc_offset_hours: f64,
    /// Rotation from image-up to gravity-up, degrees; 0 when the camera's
    /// up axis is the comb's up axis.
    pub comb_offset_deg: f64,
}

impl Default for HiveConfig {
    fn default() -> Self {
        Self {
            latitude_deg: 52.45,
            longitude_deg: 13.30,
            utc_offset_hours: 0.0,
            comb_offset_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingConfig {
    /// XYT single-linkage cutoff (comb px / quarter-seconds share the scale).
    pub d_max3: f64,
    pub min_runs_per_dance: usize,
    pub ransac: RansacConfig,
    /// Duration-to-distance calibration factor `c_d` in meters per
    /// millisecond of waggle duration.
    pub calibration_m_per_ms: f64,
    /// Gaps longer than this are treated as dance interruptions and
    /// excluded from the return-run duration, seconds.
    pub max_return_gap_s: f64,
    pub hive: HiveConfig,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            d_max3: 60.0,
            min_runs_per_dance: 4,
            ransac: RansacConfig::default(),
            // Feeder calibration: 342 m advertised with a 582.79 ms mean
            // waggle duration.
            calibration_m_per_ms: 342.0 / 582.79,
            max_return_gap_s: 5.0,
            hive: HiveConfig::default(),
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<(), MappingError> {
        if self.min_runs_per_dance < 4 {
            return Err(MappingError::InvalidConfig(format!(
                "min_runs_per_dance must be >= 4, got {}",
                self.min_runs_per_dance
            )));
        }
        if self.calibration_m_per_ms <= 0.0 {
            return Err(MappingError::InvalidConfig(
                "calibration_m_per_ms must be positive".into(),
            ));
        }
        if !(0.0..90.0).contains(&self.ransac.threshold_deg) || self.ransac.threshold_deg == 0.0 {
            return Err(MappingError::InvalidConfig(format!(
                "ransac threshold {} outside (0, 90)",
                self.ransac.threshold_deg
            )));
        }
        Ok(())
    }
}

/// One run projected into mapping space.
#[derive(Debug, Clone)]
pub struct DanceRun {
    pub record_index: usize,
    pub x: f64,
    pub y: f64,
    /// Quarter-seconds since local midnight.
    pub t_quarter_s: f64,
    pub start_utc: DateTime<Utc>,
    pub end_utc: DateTime<Utc>,
    pub duration_ms: f64,
    /// Direction in comb convention (comb offset already applied).
    pub direction_deg: f64,
}

/// A dance: runs grouped in XYT with their RANSAC inlier flags.
#[derive(Debug, Clone)]
pub struct DanceCluster {
    pub runs: Vec<DanceRun>,
    pub inliers: Vec<bool>,
}

impl DanceCluster {
    pub fn inlier_runs(&self) -> impl Iterator<Item = &DanceRun> {
        self.runs
            .iter()
            .zip(&self.inliers)
            .filter_map(|(r, &keep)| keep.then_some(r))
    }

    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Decoded dance output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldVector {
    pub runs_total: usize,
    pub runs_inlier: usize,
    /// Comb position of the dance (mean of inlier runs), px.
    pub comb_x: f64,
    pub comb_y: f64,
    pub mid_utc: DateTime<Utc>,
    /// Mean waggle-run direction relative to gravity-up, degrees.
    pub direction_deg: f64,
    pub solar_azimuth_deg: f64,
    /// Field bearing from true north, degrees.
    pub bearing_deg: f64,
    pub mean_duration_ms: f64,
    pub distance_m: f64,
    /// Mean return-run duration, ms; absent when no usable gaps exist.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_return_ms: Option<f64>,
    /// Profitability ratio `d_w / d_r`; absent with `mean_return_ms`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profitability: Option<f64>,
    pub endpoint_lat_deg: f64,
    pub endpoint_lon_deg: f64,
}

/// Quarter-seconds since local midnight of `utc` under the hive's offset.
fn quarter_seconds(utc: DateTime<Utc>, hive: &HiveConfig) -> f64 {
    let local = utc + chrono::Duration::microseconds((hive.utc_offset_hours * 3.6e9) as i64);
    let secs = f64::from(local.num_seconds_from_midnight())
        + f64::from(local.nanosecond()) / 1e9;
    secs * 4.0
}

/// Project records into mapping space. Records without a decoded direction
/// are skipped; the count of skipped records is returned alongside.
pub fn dance_runs_from_records(
    records: &[RunRecord],
    hive: &HiveConfig,
) -> (Vec<DanceRun>, usize) {
    let mut runs = Vec::new();
    let mut skipped = 0;
    for (i, r) in records.iter().enumerate() {
        let Some(direction) = r.direction_deg else {
            skipped += 1;
            continue;
        };
        let (x, y) = r.mean_position();
        runs.push(DanceRun {
            record_index: i,
            x,
            y,
            t_quarter_s: quarter_seconds(r.start_utc, hive),
            start_utc: r.start_utc,
            end_utc: r.end_utc(),
            duration_ms: r.duration_ms,
            direction_deg: wrap360(direction + hive.comb_offset_deg),
        });
    }
    (runs, skipped)
}

/// Cluster runs in XYT and apply per-cluster RANSAC. Clusters with fewer
/// than `min_runs_per_dance` members or without a strong direction mode
/// are dropped.
pub fn cluster_dances(runs: &[DanceRun], cfg: &MappingConfig) -> Vec<DanceCluster> {
    let points: Vec<[f64; 3]> = runs.iter().map(|r| [r.x, r.y, r.t_quarter_s]).collect();
    let clusters = cluster_threshold(&points, cfg.d_max3);
    let mut dances = Vec::new();
    for members in clusters {
        if members.len() < cfg.min_runs_per_dance {
            continue;
        }
        let mut cluster_runs: Vec<DanceRun> = members.iter().map(|&i| runs[i].clone()).collect();
        cluster_runs.sort_by(|a, b| a.start_utc.cmp(&b.start_utc));
        let directions: Vec<f64> = cluster_runs.iter().map(|r| r.direction_deg).collect();
        let inliers = ransac_angles(&directions, &cfg.ransac);
        if inliers.iter().filter(|&&b| b).count() < cfg.min_runs_per_dance {
            continue; // no strong mode
        }
        dances.push(DanceCluster {
            runs: cluster_runs,
            inliers,
        });
    }
    // Deterministic output order: by first run time, then comb position.
    dances.sort_by(|a, b| {
        a.runs[0]
            .start_utc
            .cmp(&b.runs[0].start_utc)
            .then(a.runs[0].x.total_cmp(&b.runs[0].x))
    });
    dances
}

/// Decode one dance to a field vector.
pub fn decode_dance(cluster: &DanceCluster, cfg: &MappingConfig) -> Result<FieldVector, MappingError> {
    let inliers: Vec<&DanceRun> = cluster.inlier_runs().collect();
    if inliers.len() < cfg.min_runs_per_dance {
        return Err(MappingError::NoStrongMode);
    }
    let directions: Vec<f64> = inliers.iter().map(|r| r.direction_deg).collect();
    let alpha = circular_mean(&directions).map_err(|_| MappingError::UndefinedMean)?;

    let first = inliers.first().unwrap().start_utc;
    let last = inliers.last().unwrap().start_utc;
    let mid = first + (last - first) / 2;
    let azimuth = solar::solar_azimuth(cfg.hive.latitude_deg, cfg.hive.longitude_deg, mid);
    let bearing = wrap360(azimuth + alpha);

    let mean_duration =
        inliers.iter().map(|r| r.duration_ms).sum::<f64>() / inliers.len() as f64;
    let distance = cfg.calibration_m_per_ms * mean_duration;

    // Return runs: gaps between temporally consecutive inlier runs, with
    // long interruptions excluded.
    let mut gaps_ms = Vec::new();
    for pair in inliers.windows(2) {
        let gap = (pair[1].start_utc - pair[0].end_utc)
            .num_microseconds()
            .unwrap_or(0) as f64
            / 1000.0;
        if gap > 0.0 && gap <= cfg.max_return_gap_s * 1000.0 {
            gaps_ms.push(gap);
        }
    }
    let mean_return = if gaps_ms.is_empty() {
        None
    } else {
        Some(gaps_ms.iter().sum::<f64>() / gaps_ms.len() as f64)
    };

    let n = inliers.len() as f64;
    let comb_x = inliers.iter().map(|r| r.x).sum::<f64>() / n;
    let comb_y = inliers.iter().map(|r| r.y).sum::<f64>() / n;
    let (lat, lon) = geo::destination(
        cfg.hive.latitude_deg,
        cfg.hive.longitude_deg,
        bearing,
        distance,
    );

    Ok(FieldVector {
        runs_total: cluster.runs.len(),
        runs_inlier: inliers.len(),
        comb_x,
        comb_y,
        mid_utc: mid,
        direction_deg: alpha,
        solar_azimuth_deg: azimuth,
        bearing_deg: bearing,
        mean_duration_ms: mean_duration,
        distance_m: distance,
        mean_return_ms: mean_return,
        profitability: mean_return.map(|d_r| mean_duration / d_r),
        endpoint_lat_deg: lat,
        endpoint_lon_deg: lon,
    })
}

/// Full mapping pass: records → decoded dances.
pub fn decode_records(
    records: &[RunRecord],
    cfg: &MappingConfig,
) -> Result<Vec<FieldVector>, MappingError> {
    cfg.validate()?;
    let (runs, _skipped) = dance_runs_from_records(records, &cfg.hive);
    let clusters = cluster_dances(&runs, cfg);
    clusters.iter().map(|c| decode_dance(c, cfg)).collect()
}

/// Calibration result of [`calibrate_distance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub c_d_m_per_ms: f64,
    pub mean_duration_ms: f64,
    pub coefficient_of_variation: f64,
    pub runs: usize,
}

/// Derive the duration-to-distance factor from runs advertising a feeder
/// at a known distance. Callers pre-filter to runs within ±10° of the
/// feeder bearing.
pub fn calibrate_distance(
    durations_ms: &[f64],
    feeder_distance_m: f64,
) -> Result<Calibration, MappingError> {
    if durations_ms.len() < 10 {
        return Err(MappingError::TooFewRuns {
            got: durations_ms.len(),
            need: 10,
        });
    }
    let n = durations_ms.len() as f64;
    let mean = durations_ms.iter().sum::<f64>() / n;
    let var = durations_ms.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(Calibration {
        c_d_m_per_ms: feeder_distance_m / mean,
        mean_duration_ms: mean,
        coefficient_of_variation: var.sqrt() / mean,
        runs: durations_ms.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::abs_diff;

    fn record(id: u64, t_s: f64, x: f64, y: f64, direction: f64, duration_ms: f64) -> RunRecord {
        let start: DateTime<Utc> = "2016-08-10T10:00:00Z".parse().unwrap();
        RunRecord {
            id,
            start_frame: (t_s * 100.0) as u64,
            start_utc: start + chrono::Duration::microseconds((t_s * 1e6) as i64),
            duration_ms,
            trace: vec![((t_s * 100.0) as u64, x, y)],
            snippet_file: None,
            p_waggle: None,
            axis_deg: Some(direction % 180.0),
            direction_deg: Some(direction),
            confidence: None,
        }
    }

    fn cfg() -> MappingConfig {
        MappingConfig::default()
    }

    #[test]
    fn six_runs_at_one_spot_form_one_dance() {
        let records: Vec<RunRecord> = (0..6)
            .map(|i| record(i, i as f64 * 4.0, 100.0, 100.0, 30.0, 500.0))
            .collect();
        let (runs, skipped) = dance_runs_from_records(&records, &cfg().hive);
        assert_eq!(skipped, 0);
        let clusters = cluster_dances(&runs, &MappingConfig { d_max3: 40.0, ..cfg() });
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].runs.len(), 6);
    }

    #[test]
    fn three_runs_are_not_a_dance() {
        let records: Vec<RunRecord> = (0..3)
            .map(|i| record(i, i as f64 * 4.0, 100.0, 100.0, 30.0, 500.0))
            .collect();
        let (runs, _) = dance_runs_from_records(&records, &cfg().hive);
        assert!(cluster_dances(&runs, &cfg()).is_empty());
    }

    #[test]
    fn bouts_ten_minutes_apart_split_on_the_time_axis() {
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(record(i, i as f64 * 4.0, 100.0, 100.0, 30.0, 500.0));
        }
        for i in 0..5 {
            records.push(record(5 + i, 600.0 + i as f64 * 4.0, 100.0, 100.0, 30.0, 500.0));
        }
        let (runs, _) = dance_runs_from_records(&records, &cfg().hive);
        // XYT distance between the bouts: 600 s * 4 = 2400 units >> d_max3.
        let clusters = cluster_dances(&runs, &cfg());
        assert_eq!(clusters.len(), 2);
    }

    #[test]
    fn decode_uses_azimuth_plus_mean_direction() {
        let records: Vec<RunRecord> = (0..6)
            .map(|i| record(i, i as f64 * 3.0, 100.0, 100.0, 90.0, 582.79))
            .collect();
        let vectors = decode_records(&records, &cfg()).unwrap();
        assert_eq!(vectors.len(), 1);
        let v = &vectors[0];
        assert!(abs_diff(v.bearing_deg, v.solar_azimuth_deg + 90.0) < 1e-9);
        assert!((v.distance_m - 342.0).abs() < 1e-9, "paper scenario distance");
        // 5 gaps of 3 s - 0.58279 s each.
        let d_r = v.mean_return_ms.unwrap();
        assert!((d_r - (3000.0 - 582.79)).abs() < 1.0);
        assert!((v.profitability.unwrap() - 582.79 / d_r).abs() < 1e-9);
    }

    #[test]
    fn flips_are_rejected_and_do_not_move_the_bearing_much() {
        let mut records: Vec<RunRecord> = (0..8)
            .map(|i| record(i, i as f64 * 3.0, 100.0, 100.0, 40.0 + (i as f64) * 0.5, 500.0))
            .collect();
        // Flip two of the eight directions by 180°.
        for i in [2usize, 5] {
            let d = records[i].direction_deg.unwrap();
            records[i].direction_deg = Some(wrap360(d + 180.0));
        }
        let vectors = decode_records(&records, &cfg()).unwrap();
        assert_eq!(vectors.len(), 1);
        assert_eq!(vectors[0].runs_inlier, 6);
        assert!(abs_diff(vectors[0].direction_deg, 41.75) < 1.0);
    }

    #[test]
    fn no_strong_mode_rejects_the_cluster() {
        let records: Vec<RunRecord> = [0.0, 90.0, 180.0, 270.0]
            .iter()
            .enumerate()
            .map(|(i, &d)| record(i as u64, i as f64 * 3.0, 100.0, 100.0, d, 500.0))
            .collect();
        assert!(decode_records(&records, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn interruptions_are_excluded_from_return_duration() {
        // One 12 s interruption: short enough to stay in one XYT cluster
        // (48 quarter-second units <= d_max3), too long for a return run.
        let mut records = Vec::new();
        let mut t = 0.0;
        for i in 0..6 {
            records.push(record(i, t, 100.0, 100.0, 30.0, 500.0));
            t += if i == 2 { 12.0 } else { 2.5 };
        }
        let vectors = decode_records(&records, &cfg()).unwrap();
        assert_eq!(vectors.len(), 1);
        let d_r = vectors[0].mean_return_ms.unwrap();
        assert!((d_r - 2000.0).abs() < 1.0, "gap mean {d_r}");
    }

    #[test]
    fn calibration_matches_feeder_arithmetic() {
        let durations = vec![582.79; 12];
        let cal = calibrate_distance(&durations, 342.0).unwrap();
        assert!((cal.c_d_m_per_ms - 342.0 / 582.79).abs() < 1e-12);
        assert!((cal.c_d_m_per_ms - 0.58684).abs() < 1e-4);
        assert_eq!(cal.coefficient_of_variation, 0.0);

        let cal2 = calibrate_distance(&vec![500.0; 10], 100.0).unwrap();
        assert!((cal2.c_d_m_per_ms - 0.2).abs() < 1e-12);

        assert!(matches!(
            calibrate_distance(&[500.0, 500.0], 100.0),
            Err(MappingError::TooFewRuns { .. })
        ));
    }

    #[test]
    fn bearing_equivariance_under_direction_shift() {
        let records: Vec<RunRecord> = (0..6)
            .map(|i| record(i, i as f64 * 3.0, 100.0, 100.0, 75.0, 500.0))
            .collect();
        let base = decode_records(&records, &cfg()).unwrap()[0].bearing_deg;
        for delta in [10.0, 90.0, 215.0] {
            let shifted: Vec<RunRecord> = records
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.direction_deg = Some(wrap360(r.direction_deg.unwrap() + delta));
                    r
                })
                .collect();
            let moved = decode_records(&shifted, &cfg()).unwrap()[0].bearing_deg;
            assert!(
                abs_diff(moved, base + delta) < 1e-6,
                "delta {delta}: {base} -> {moved}"
            );
        }
    }
}
