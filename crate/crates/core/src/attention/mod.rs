//! Real-time detection of waggle-like activity.
//!
//! Three layers, processed per frame:
//!
//! * layer 0 — every pixel keeps a sliding window of its last `b` intensity
//!   values and becomes an active *dot detector* when the window has
//!   spectral power above `t_h` at any waggle-band frequency ([`grid`]);
//! * layer 1 — active detectors are clustered spatially (single-linkage HAC
//!   cut at `d_max1`), small clusters are dropped as noise and the cluster
//!   centroids are kept as potential dancer positions;
//! * layer 2 — centroids of successive frames are concatenated into
//!   waggle-run candidates ([`runs`]); candidates that collect enough
//!   detections and span at least `min_waggle_ms` are emitted as
//!   [`WaggleRun`]s together with a stack of image snippets cropped around
//!   the trace.

mod detector;
mod grid;
mod runs;
pub mod score;
mod snippets;

pub use detector::Detector;
pub use grid::PixelWindowGrid;
pub use runs::{RunAssembler, RunTrace};
pub use snippets::crop_snippet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hac::cluster_threshold;
use crate::records::SnippetStack;

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error("invalid attention config: {0}")]
    InvalidConfig(String),
    #[error("frame size {got} does not match grid size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frame index {got} not after previously observed {last}")]
    OutOfOrderFrame { last: u64, got: u64 },
    #[error("frame {needed} already evicted from the raw ring (oldest kept: {oldest}); increase frame_buffer")]
    FramesEvicted { needed: u64, oldest: u64 },
}

/// Parameters of the attention stage. All distances are in pixels, times in
/// frames unless suffixed otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionConfig {
    /// Sliding-window width `b` in frames.
    pub b: usize,
    /// Video sample rate `s_r` in Hz.
    pub sample_rate_hz: f64,
    /// Test frequencies of the waggle band, Hz.
    pub waggle_band_hz: Vec<f64>,
    /// Activation threshold `t_h` on the per-frequency score.
    pub t_h: f64,
    /// Layer-1 cluster distance `d_max1` (half a body length).
    pub d_max1: f64,
    /// Minimum detectors per layer-1 cluster `c_min1`.
    pub c_min1: usize,
    /// Maximum inter-frame centroid distance `d_max2`.
    pub d_max2: f64,
    /// Frames a run candidate may stay open without new detections.
    pub g_max2: u64,
    /// Minimum detections per confirmed run `c_min2`.
    pub c_min2: usize,
    /// Minimum run duration in milliseconds.
    pub min_waggle_ms: f64,
    /// Edge length of exported square snippets.
    pub snippet_size: usize,
    /// Capacity of the raw-frame ring used for snippet export; bounds the
    /// longest exportable run to `frame_buffer - g_max2 - 1` frames.
    pub frame_buffer: usize,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            b: 32,
            sample_rate_hz: 100.0,
            waggle_band_hz: vec![10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0],
            t_h: 100.0,
            d_max1: 11.0,
            c_min1: 10,
            d_max2: 7.0,
            g_max2: 20,
            c_min2: 20,
            min_waggle_ms: 200.0,
            snippet_size: 50,
            frame_buffer: 768,
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<(), AttentionError> {
        let err = |msg: String| Err(AttentionError::InvalidConfig(msg));
        if self.b < 2 {
            return err(format!("b must be >= 2, got {}", self.b));
        }
        if self.waggle_band_hz.is_empty() {
            return err("waggle_band_hz must not be empty".into());
        }
        for &r in &self.waggle_band_hz {
            if !(10.0..=16.0).contains(&r) {
                return err(format!("waggle band frequency {r} outside [10, 16] Hz"));
            }
            if r >= self.sample_rate_hz / 2.0 {
                return err(format!(
                    "frequency {r} violates Nyquist at sample rate {}",
                    self.sample_rate_hz
                ));
            }
        }
        if self.t_h <= 0.0 {
            return err(format!("t_h must be positive, got {}", self.t_h));
        }
        if self.d_max1 <= 0.0 || self.d_max2 <= 0.0 {
            return err("d_max1 and d_max2 must be positive".into());
        }
        if self.c_min1 == 0 || self.c_min2 == 0 {
            return err("c_min1 and c_min2 must be positive".into());
        }
        if self.snippet_size == 0 {
            return err("snippet_size must be positive".into());
        }
        if self.frame_buffer <= self.g_max2 as usize + 1 {
            return err(format!(
                "frame_buffer {} too small for g_max2 {}",
                self.frame_buffer, self.g_max2
            ));
        }
        Ok(())
    }
}

/// One confirmed waggle run: where and when the dancer waggled, plus the
/// image snippets the later stages work on.
#[derive(Debug, Clone)]
pub struct WaggleRun {
    pub id: u64,
    pub start_frame: u64,
    pub start_utc: DateTime<Utc>,
    pub duration_ms: f64,
    /// Per-detection centroid positions `(frame, x, y)`.
    pub trace: Vec<(u64, f64, f64)>,
    /// One square crop per trace entry, centered on that entry's centroid.
    pub snippets: SnippetStack,
}

impl WaggleRun {
    /// Mean trace position, used as the run's comb location.
    pub fn mean_position(&self) -> (f64, f64) {
        let n = self.trace.len().max(1) as f64;
        let sx: f64 = self.trace.iter().map(|t| t.1).sum();
        let sy: f64 = self.trace.iter().map(|t| t.2).sum();
        (sx / n, sy / n)
    }

    pub fn last_frame(&self) -> u64 {
        self.trace.last().map(|t| t.0).unwrap_or(self.start_frame)
    }
}

/// Layer 1: cluster active detector coordinates, drop clusters smaller than
/// `c_min1` and return the arithmetic-mean centroids sorted by `(y, x)`.
///
/// Member points are sorted before averaging so the result is bit-identical
/// under permutations of the input.
pub fn cluster_active(points: &[(f64, f64)], d_max1: f64, c_min1: usize) -> Vec<(f64, f64)> {
    let coords: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
    let clusters = cluster_threshold(&coords, d_max1);
    let mut centroids: Vec<(f64, f64)> = Vec::new();
    for cluster in clusters {
        if cluster.len() < c_min1 {
            continue;
        }
        let mut members: Vec<(f64, f64)> = cluster.iter().map(|&i| points[i]).collect();
        members.sort_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap());
        let n = members.len() as f64;
        let sx: f64 = members.iter().map(|p| p.0).sum();
        let sy: f64 = members.iter().map(|p| p.1).sum();
        centroids.push((sx / n, sy / n));
    }
    centroids.sort_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap());
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clusters_two_groups_at_their_means() {
        let mut points = Vec::new();
        for i in 0..10 {
            points.push((10.0 + i as f64, 20.0));
        }
        for i in 0..10 {
            points.push((110.0 + i as f64, 80.0));
        }
        let centroids = cluster_active(&points, 12.0, 2);
        assert_eq!(centroids.len(), 2);
        assert!((centroids[0].0 - 14.5).abs() < 1e-12 && (centroids[0].1 - 20.0).abs() < 1e-12);
        assert!((centroids[1].0 - 114.5).abs() < 1e-12 && (centroids[1].1 - 80.0).abs() < 1e-12);
    }

    #[test]
    fn small_clusters_are_dropped() {
        let points = vec![(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)];
        assert!(cluster_active(&points, 12.0, 4).is_empty());
    }

    #[test]
    fn empty_input_yields_empty_output() {
        assert!(cluster_active(&[], 12.0, 4).is_empty());
    }

    #[test]
    fn centroids_bit_identical_under_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<(f64, f64)> = (0..60)
            .map(|_| (rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)))
            .collect();
        let base = cluster_active(&points, 6.0, 3);
        let mut shuffled = points.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.random_range(0..=i);
            shuffled.swap(i, j);
        }
        let permuted = cluster_active(&shuffled, 6.0, 3);
        assert_eq!(base.len(), permuted.len());
        for (a, b) in base.iter().zip(&permuted) {
            assert_eq!(a.0.to_bits(), b.0.to_bits());
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }

    #[test]
    fn config_validation_catches_bad_band() {
        let cfg = AttentionConfig {
            waggle_band_hz: vec![9.0],
            ..AttentionConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = AttentionConfig {
            sample_rate_hz: 30.0,
            ..AttentionConfig::default()
        };
        assert!(cfg.validate().is_err(), "16 Hz violates Nyquist at 30 Hz");
        assert!(AttentionConfig::default().validate().is_ok());
    }
}
