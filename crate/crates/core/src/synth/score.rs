//! Matching detections against ground truth and summary statistics.

use serde::{Deserialize, Serialize};

use super::{GroundTruth, GtRun};
use crate::circular::signed_error_stats;
use crate::records::RunRecord;

/// Matching thresholds: temporal overlap relative to the ground-truth run
/// and maximum distance between mean positions.
#[derive(Debug, Clone, Copy)]
pub struct MatchRule {
    pub min_overlap: f64,
    pub max_distance_px: f64,
}

impl MatchRule {
    pub fn for_ground_truth(gt: &GroundTruth) -> Self {
        Self {
            min_overlap: 0.5,
            max_distance_px: gt.body_length_px,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreReport {
    pub ground_truth_runs: usize,
    pub detections: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    /// Detected minus true duration over matches, ms.
    pub duration_bias_ms_mean: f64,
    pub duration_bias_ms_sd: f64,
    /// Signed circular error of decoded directions over matches that carry
    /// one, degrees.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub angular_error_mean_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub angular_error_sd_deg: Option<f64>,
    pub angular_samples: usize,
}

fn overlap_fraction(gt: &GtRun, det: &RunRecord) -> f64 {
    let det_start = det.start_frame;
    let det_end = det
        .trace
        .last()
        .map(|t| t.0)
        .unwrap_or(det.start_frame);
    let lo = det_start.max(gt.start_frame);
    let hi = det_end.min(gt.end_frame);
    if hi < lo {
        return 0.0;
    }
    (hi - lo + 1) as f64 / (gt.end_frame - gt.start_frame + 1) as f64
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Greedy one-to-one matching by descending temporal overlap; ties resolve
/// by ground-truth order then detection order, so the report is independent
/// of detection id relabeling.
pub fn score_detections(
    gt: &GroundTruth,
    detections: &[RunRecord],
    rule: MatchRule,
) -> ScoreReport {
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (gi, g) in gt.runs.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            let ov = overlap_fraction(g, d);
            if ov >= rule.min_overlap
                && distance(g.mean_position(), d.mean_position()) <= rule.max_distance_px
            {
                candidates.push((gi, di, ov));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut gt_taken = vec![false; gt.runs.len()];
    let mut det_taken = vec![false; detections.len()];
    let mut matches: Vec<(usize, usize)> = Vec::new();
    for (gi, di, _) in candidates {
        if !gt_taken[gi] && !det_taken[di] {
            gt_taken[gi] = true;
            det_taken[di] = true;
            matches.push((gi, di));
        }
    }

    let matched = matches.len();
    let duration_deltas: Vec<f64> = matches
        .iter()
        .map(|&(gi, di)| detections[di].duration_ms - gt.runs[gi].duration_ms)
        .collect();
    let (bias_mean, bias_sd) = mean_sd(&duration_deltas);

    let angle_pairs: Vec<(f64, f64)> = matches
        .iter()
        .filter_map(|&(gi, di)| {
            detections[di]
                .direction_deg
                .map(|d| (d, gt.runs[gi].direction_deg))
        })
        .collect();
    let (ang_mean, ang_sd) = if angle_pairs.is_empty() {
        (None, None)
    } else {
        let (m, s) = signed_error_stats(&angle_pairs);
        (Some(m), Some(s))
    };

    ScoreReport {
        ground_truth_runs: gt.runs.len(),
        detections: detections.len(),
        matched,
        precision: if detections.is_empty() {
            1.0
        } else {
            matched as f64 / detections.len() as f64
        },
        recall: if gt.runs.is_empty() {
            1.0
        } else {
            matched as f64 / gt.runs.len() as f64
        },
        duration_bias_ms_mean: bias_mean,
        duration_bias_ms_sd: bias_sd,
        angular_error_mean_deg: ang_mean,
        angular_error_sd_deg: ang_sd,
        angular_samples: angle_pairs.len(),
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}
