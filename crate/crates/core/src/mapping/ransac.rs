//! RANSAC over waggle-run directions.
//!
//! The model space is one-dimensional (a single direction), so every
//! sample IS one of the observed angles. When the set is no larger than
//! the iteration budget the candidates are enumerated exhaustively, which
//! is both deterministic and at least as thorough as sampling; larger sets
//! fall back to seeded random sampling.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circular::abs_diff;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Circular inlier threshold, degrees.
    pub threshold_deg: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            threshold_deg: 25.0,
            seed: 42,
        }
    }
}

/// Best-consensus inlier mask over a set of directions.
///
/// Each candidate model is one observed angle; its consensus set is every
/// angle within the circular threshold. The largest consensus wins, ties
/// going to the earliest candidate, so results are deterministic for a
/// fixed seed.
pub fn ransac_angles(directions_deg: &[f64], cfg: &RansacConfig) -> Vec<bool> {
    let n = directions_deg.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best_mask = vec![false; n];
    let mut best_count = 0usize;

    let evaluate = |model: f64, best_mask: &mut Vec<bool>, best_count: &mut usize| {
        let mask: Vec<bool> = directions_deg
            .iter()
            .map(|&a| abs_diff(a, model) <= cfg.threshold_deg)
            .collect();
        let count = mask.iter().filter(|&&b| b).count();
        if count > *best_count {
            *best_count = count;
            *best_mask = mask;
        }
    };

    if n <= cfg.iterations {
        for &model in directions_deg {
            evaluate(model, &mut best_mask, &mut best_count);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.iterations {
            let model = directions_deg[rng.random_range(0..n)];
            evaluate(model, &mut best_mask, &mut best_count);
        }
    }
    best_mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::resultant_length;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(threshold: f64) -> RansacConfig {
        RansacConfig {
            iterations: 100,
            threshold_deg: threshold,
            seed: 1,
        }
    }

    /// Exhaustive oracle with the same earliest-candidate tie rule.
    fn exhaustive_best(directions: &[f64], threshold: f64) -> Vec<bool> {
        let mut best: Vec<bool> = vec![false; directions.len()];
        let mut best_count = 0;
        for &model in directions {
            let mask: Vec<bool> = directions
                .iter()
                .map(|&a| abs_diff(a, model) <= threshold)
                .collect();
            let count = mask.iter().filter(|&&b| b).count();
            if count > best_count {
                best_count = count;
                best = mask;
            }
        }
        best
    }

    #[test]
    fn flipped_pair_is_excluded() {
        let dirs = [10.0, 12.0, 8.0, 11.0, 190.0, 192.0];
        let mask = ransac_angles(&dirs, &cfg(20.0));
        assert_eq!(mask, vec![true, true, true, true, false, false]);
    }

    #[test]
    fn equal_angles_are_all_inliers() {
        let dirs = [77.0; 9];
        assert!(ransac_angles(&dirs, &cfg(20.0)).iter().all(|&b| b));
    }

    #[test]
    fn four_way_spread_has_no_strong_mode() {
        let dirs = [0.0, 90.0, 180.0, 270.0];
        let mask = ransac_angles(&dirs, &cfg(20.0));
        assert_eq!(mask.iter().filter(|&&b| b).count(), 1, "max consensus is 1");
    }

    #[test]
    fn matches_exhaustive_enumeration_on_small_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let n = rng.random_range(1..=12);
            let dirs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..360.0)).collect();
            let threshold = rng.random_range(5.0..40.0);
            let got = ransac_angles(
                &dirs,
                &RansacConfig {
                    iterations: 100,
                    threshold_deg: threshold,
                    seed: 5,
                },
            );
            assert_eq!(got, exhaustive_best(&dirs, threshold));
        }
    }

    #[test]
    fn deterministic_for_fixed_seed_on_large_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let dirs: Vec<f64> = (0..500).map(|_| rng.random_range(0.0..360.0)).collect();
        let c = RansacConfig {
            iterations: 100,
            threshold_deg: 25.0,
            seed: 9,
        };
        assert_eq!(ransac_angles(&dirs, &c), ransac_angles(&dirs, &c));
    }

    #[test]
    fn inliers_never_less_concentrated_than_full_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let n = rng.random_range(4..=20);
            let mode: f64 = rng.random_range(0.0..360.0);
            let dirs: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_range(0.0..1.0) < 0.2 {
                        rng.random_range(0.0..360.0)
                    } else {
                        mode + rng.random_range(-15.0..15.0)
                    }
                })
                .collect();
            let mask = ransac_angles(&dirs, &cfg(25.0));
            let inliers: Vec<f64> = dirs
                .iter()
                .zip(&mask)
                .filter_map(|(&d, &m)| m.then_some(d))
                .collect();
            if inliers.is_empty() {
                continue;
            }
            assert!(
                resultant_length(&inliers) >= resultant_length(&dirs) - 1e-12,
                "dirs {dirs:?} mask {mask:?}"
            );
        }
    }
}
