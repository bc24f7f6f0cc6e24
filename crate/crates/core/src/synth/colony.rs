//! Run-record-level colony synthesis for mapping verification.
//!
//! Generates the decoded-run table a detector would produce for a colony
//! that advertises one feeder: dances at random comb positions and times,
//! per-run directions referenced to the solar azimuth at the run's time
//! with Gaussian divergence noise, and durations with a configurable
//! coefficient of variation. This exercises the mapping stage end to end
//! without rendering video.

use chrono::{DateTime, Duration, Utc};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circular::wrap360;
use crate::mapping::solar::solar_azimuth;
use crate::records::RunRecord;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ColonySpec {
    pub hive_lat_deg: f64,
    pub hive_lon_deg: f64,
    /// True field bearing of the advertised feeder, degrees from north.
    pub feeder_bearing_deg: f64,
    pub feeder_distance_m: f64,
    pub dances: usize,
    pub runs_min: usize,
    pub runs_max: usize,
    /// Per-run angular noise SD, degrees.
    pub waggle_sd_deg: f64,
    pub mean_duration_ms: f64,
    /// Coefficient of variation of the waggle durations.
    pub duration_cv: f64,
    pub mean_return_ms: f64,
    pub return_sd_ms: f64,
    /// Comb extent for random dance positions, px.
    pub comb_width: f64,
    pub comb_height: f64,
    pub sample_rate_hz: f64,
    pub start_utc: DateTime<Utc>,
    /// Length of the observation window, seconds.
    pub window_s: f64,
    pub seed: u64,
}

impl Default for ColonySpec {
    fn default() -> Self {
        Self {
            hive_lat_deg: 52.45,
            hive_lon_deg: 13.30,
            feeder_bearing_deg: 225.0,
            feeder_distance_m: 342.0,
            dances: 571,
            runs_min: 4,
            runs_max: 8,
            waggle_sd_deg: 14.37,
            mean_duration_ms: 582.79,
            duration_cv: 0.34,
            mean_return_ms: 2000.0,
            return_sd_ms: 400.0,
            comb_width: 320.0,
            comb_height: 240.0,
            sample_rate_hz: 100.0,
            start_utc: "2016-08-10T08:00:00Z".parse().unwrap(),
            window_s: 5.0 * 3600.0,
            seed: 2016,
        }
    }
}

/// Per-dance ground truth of the synthetic colony.
#[derive(Debug, Clone)]
pub struct DanceTruth {
    pub position: (f64, f64),
    pub start_utc: DateTime<Utc>,
    pub runs: usize,
    pub bearing_deg: f64,
}

/// Generate decoded run records as the orientation stage would emit them.
/// Records are sorted by start time and get sequential ids.
pub fn synth_colony_records(spec: &ColonySpec) -> (Vec<RunRecord>, Vec<DanceTruth>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let duration_dist = Normal::new(
        spec.mean_duration_ms,
        (spec.duration_cv * spec.mean_duration_ms).max(1e-9),
    )
    .unwrap();
    let gap_dist = Normal::new(spec.mean_return_ms, spec.return_sd_ms.max(1e-9)).unwrap();
    let angle_dist = Normal::new(0.0, spec.waggle_sd_deg.max(1e-9)).unwrap();
    let margin = 20.0;

    let mut records = Vec::new();
    let mut truths = Vec::new();
    for _ in 0..spec.dances {
        let runs = rng.random_range(spec.runs_min..=spec.runs_max);
        let x = rng.random_range(margin..spec.comb_width - margin);
        let y = rng.random_range(margin..spec.comb_height - margin);
        // Leave room for the dance within the observation window.
        let max_len_s = runs as f64 * (spec.mean_duration_ms + spec.mean_return_ms) * 4.0 / 1000.0;
        let dance_start_s = rng.random_range(0.0..(spec.window_s - max_len_s).max(1.0));
        let dance_start = spec.start_utc + micros(dance_start_s * 1e6);
        truths.push(DanceTruth {
            position: (x, y),
            start_utc: dance_start,
            runs,
            bearing_deg: spec.feeder_bearing_deg,
        });

        let mut t_s = dance_start_s;
        for _ in 0..runs {
            let duration_ms = duration_dist
                .sample(&mut rng)
                .clamp(250.0, 2.5 * spec.mean_duration_ms);
            let start_utc = spec.start_utc + micros(t_s * 1e6);
            let azimuth = solar_azimuth(spec.hive_lat_deg, spec.hive_lon_deg, start_utc);
            let direction = wrap360(
                spec.feeder_bearing_deg - azimuth + angle_dist.sample(&mut rng),
            );
            let start_frame = (t_s * spec.sample_rate_hz).round() as u64;
            let end_frame = start_frame + (duration_ms / 1000.0 * spec.sample_rate_hz) as u64;
            let jx = x + rng.random_range(-4.0..4.0);
            let jy = y + rng.random_range(-4.0..4.0);
            records.push(RunRecord {
                id: 0,
                start_frame,
                start_utc,
                duration_ms,
                trace: vec![
                    (start_frame, jx, jy),
                    ((start_frame + end_frame) / 2, jx, jy),
                    (end_frame, jx, jy),
                ],
                snippet_file: None,
                p_waggle: None,
                axis_deg: Some(direction % 180.0),
                direction_deg: Some(direction),
                confidence: Some(5.0),
            });
            t_s += duration_ms / 1000.0
                + gap_dist.sample(&mut rng).clamp(600.0, 5000.0) / 1000.0;
        }
    }
    records.sort_by_key(|r| r.start_frame);
    for (i, r) in records.iter_mut().enumerate() {
        r.id = i as u64;
    }
    (records, truths)
}

fn micros(us: f64) -> Duration {
    Duration::microseconds(us.round() as i64)
}

/// Flip a seeded fraction of run directions by 180°, as undisambiguated
/// orientation estimates would be. Returns the flipped copy and the
/// affected indices.
pub fn flip_fraction(records: &[RunRecord], fraction: f64, seed: u64) -> (Vec<RunRecord>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = records.to_vec();
    let mut flipped = Vec::new();
    for (i, r) in out.iter_mut().enumerate() {
        if rng.random_range(0.0..1.0) < fraction {
            if let Some(d) = r.direction_deg {
                r.direction_deg = Some(wrap360(d + 180.0));
                flipped.push(i);
            }
        }
    }
    (out, flipped)
}
