//! Circular statistics and angle conventions.
//!
//! All angles in this crate are degrees, measured clockwise from "up"
//! (decreasing image row, or gravity-up on the comb). Directed angles live
//! in `[0, 360)`, undirected axes in `[0, 180)`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CircularError {
    /// The resultant vector of the sample is (numerically) zero, so the
    /// mean direction is undefined.
    #[error("mean direction undefined: resultant length {0} below 1e-12")]
    UndefinedMean(f64),
}

/// Wrap an angle in degrees into `[0, 360)`.
pub fn wrap360(deg: f64) -> f64 {
    let w = deg % 360.0;
    if w < 0.0 { w + 360.0 } else { w }
}

/// Wrap an axis (undirected) angle in degrees into `[0, 180)`.
pub fn wrap180(deg: f64) -> f64 {
    let w = deg % 180.0;
    if w < 0.0 { w + 180.0 } else { w }
}

/// Signed circular difference `a - b` wrapped into `(-180, 180]`.
pub fn signed_diff(a: f64, b: f64) -> f64 {
    let d = wrap360(a - b);
    if d > 180.0 { d - 360.0 } else { d }
}

/// Absolute circular distance between two directions, in `[0, 180]`.
pub fn abs_diff(a: f64, b: f64) -> f64 {
    signed_diff(a, b).abs()
}

/// Unit vector `(dx, dy)` in image coordinates (x right, y down) for a
/// direction given in the comb convention (0° = up, clockwise positive).
pub fn unit_vector(deg: f64) -> (f64, f64) {
    let rad = deg.to_radians();
    (rad.sin(), -rad.cos())
}

/// Direction in the comb convention for an image-space vector
/// `(dx, dy)` with y pointing down. Inverse of [`unit_vector`].
pub fn vector_angle(dx: f64, dy: f64) -> f64 {
    wrap360(dx.atan2(-dy).to_degrees())
}

/// Mean direction of a set of angles: `atan2(Σ sin, Σ cos)` mapped to
/// `[0, 360)`. Fails when the resultant vector is numerically zero
/// (e.g. two antipodal angles).
pub fn circular_mean(angles_deg: &[f64]) -> Result<f64, CircularError> {
    let (mut s, mut c) = (0.0_f64, 0.0_f64);
    for &a in angles_deg {
        let r = a.to_radians();
        s += r.sin();
        c += r.cos();
    }
    let resultant = (s * s + c * c).sqrt();
    if resultant < 1e-12 {
        return Err(CircularError::UndefinedMean(resultant));
    }
    Ok(wrap360(s.atan2(c).to_degrees()))
}

/// Mean resultant length in `[0, 1]`; 1 means all angles coincide.
/// Returns 0 for an empty sample.
pub fn resultant_length(angles_deg: &[f64]) -> f64 {
    if angles_deg.is_empty() {
        return 0.0;
    }
    let (mut s, mut c) = (0.0_f64, 0.0_f64);
    for &a in angles_deg {
        let r = a.to_radians();
        s += r.sin();
        c += r.cos();
    }
    (s * s + c * c).sqrt() / angles_deg.len() as f64
}

/// Mean and standard deviation of signed circular errors
/// `detected - reference`, each wrapped to `(-180, 180]`.
///
/// The errors are treated as linear quantities once wrapped, which is the
/// appropriate summary for tightly concentrated error distributions.
pub fn signed_error_stats(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let errs: Vec<f64> = pairs.iter().map(|&(d, r)| signed_diff(d, r)).collect();
    let mean = errs.iter().sum::<f64>() / n as f64;
    let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent route: complex-arithmetic mean direction.
    fn complex_mean(angles: &[f64]) -> f64 {
        let mut re = 0.0_f64;
        let mut im = 0.0_f64;
        for &a in angles {
            re += a.to_radians().cos();
            im += a.to_radians().sin();
        }
        wrap360(im.atan2(re).to_degrees())
    }

    #[test]
    fn wraparound_pairs() {
        assert!(abs_diff(circular_mean(&[350.0, 10.0]).unwrap(), 0.0) < 1e-9);
        assert!(abs_diff(circular_mean(&[10.0, -10.0]).unwrap(), 0.0) < 1e-9);
    }

    #[test]
    fn antipodal_pair_is_undefined() {
        assert!(matches!(
            circular_mean(&[0.0, 180.0]),
            Err(CircularError::UndefinedMean(_))
        ));
    }

    #[test]
    fn matches_complex_oracle_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(1..=12);
            let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..360.0)).collect();
            if resultant_length(&angles) < 1e-6 {
                continue;
            }
            let got = circular_mean(&angles).unwrap();
            let want = complex_mean(&angles);
            assert!(
                abs_diff(got, want) < 1e-9,
                "angles {angles:?}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn rotation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let n = rng.random_range(2..=10);
            let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..90.0)).collect();
            let delta: f64 = rng.random_range(-720.0..720.0);
            let shifted: Vec<f64> = angles.iter().map(|a| wrap360(a + delta)).collect();
            let base = circular_mean(&angles).unwrap();
            let moved = circular_mean(&shifted).unwrap();
            assert!(
                abs_diff(moved, wrap360(base + delta)) < 1e-8,
                "delta {delta}: {base} -> {moved}"
            );
        }
    }

    #[test]
    fn unit_vector_roundtrip() {
        for deg in [0.0, 45.0, 90.0, 180.0, 215.0, 270.0, 359.0] {
            let (dx, dy) = unit_vector(deg);
            assert!((vector_angle(dx, dy) - deg).abs() < 1e-9);
        }
        // 0° must point straight up (negative y in image coordinates).
        let (dx, dy) = unit_vector(0.0);
        assert!(dx.abs() < 1e-12 && (dy + 1.0).abs() < 1e-12);
        // 90° points right.
        let (dx, dy) = unit_vector(90.0);
        assert!((dx - 1.0).abs() < 1e-12 && dy.abs() < 1e-12);
    }

    #[test]
    fn signed_errors() {
        let (mean, sd) = signed_error_stats(&[(359.0, 1.0), (3.0, 1.0)]);
        assert!((mean - 0.0).abs() < 1e-9);
        assert!((sd - 2.0).abs() < 1e-9);
    }
}
