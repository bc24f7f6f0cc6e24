//! Decoding the dancer's body axis and direction from snippet stacks.
//!
//! Consecutive snippet frames are subtracted; a laterally waggling bee
//! leaves a Gabor-like lobe pair in the difference image whose Fourier
//! power concentrates in a peak pair along the motion direction,
//! independent of where the bee sits in the snippet. Summing the power
//! spectra over the stack, bandpass-filtering around the expected radial
//! frequency (difference-of-Gaussians ring) and taking the weighted
//! principal axis yields the lateral motion direction; the body axis is
//! 90° away. The remaining 180° ambiguity is resolved from the forward
//! drift of the detector trace.

pub mod fft;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circular::{abs_diff, vector_angle, wrap180, wrap360};
use crate::records::SnippetStack;

#[derive(Debug, Error)]
pub enum OrientationError {
    #[error("invalid bandpass config: {0}")]
    InvalidConfig(String),
    #[error("difference image needs equal dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("snippet stack has {0} frames, need at least 2")]
    StackTooShort(usize),
    #[error("spectrum carries no signal")]
    ZeroSpectrum,
    #[error("trace of {got} points cannot be disambiguated (need {need}); axis is {axis_deg:.1}")]
    UnresolvedDirection { got: usize, need: usize, axis_deg: f64 },
}

/// Frequency-domain bandpass parameters.
///
/// The expected radial frequency of the lobe pattern is
/// `k = i_size / (2 * displacement)`: a lateral step of `x` px/frame makes
/// the dominant spatial period twice the displacement.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BandpassConfig {
    /// Snippet edge length, px.
    pub i_size: usize,
    /// Expected lateral displacement per frame, px.
    pub displacement_px: f64,
    /// Inner DoG sigma; defaults to `k / 2`.
    pub sigma_inner: Option<f64>,
    /// Outer DoG sigma; defaults to `k`.
    pub sigma_outer: Option<f64>,
}

impl Default for BandpassConfig {
    fn default() -> Self {
        Self {
            i_size: 50,
            displacement_px: 6.0,
            sigma_inner: None,
            sigma_outer: None,
        }
    }
}

impl BandpassConfig {
    /// The ring radius `k = I_size / (2x)`.
    pub fn expected_radius(&self) -> f64 {
        self.i_size as f64 / (2.0 * self.displacement_px)
    }

    pub fn sigmas(&self) -> (f64, f64) {
        let k = self.expected_radius();
        (
            self.sigma_inner.unwrap_or(k / 2.0),
            self.sigma_outer.unwrap_or(k),
        )
    }

    pub fn validate(&self) -> Result<(), OrientationError> {
        let k = self.expected_radius();
        let (si, so) = self.sigmas();
        if !(k.is_finite() && k > 0.0 && k < self.i_size as f64 / 2.0) {
            return Err(OrientationError::InvalidConfig(format!(
                "expected radius {k} outside (0, i_size/2)"
            )));
        }
        if !(si > 0.0 && si < so) {
            return Err(OrientationError::InvalidConfig(format!(
                "sigmas ({si}, {so}) must satisfy 0 < inner < outer"
            )));
        }
        Ok(())
    }
}

/// Result of decoding one waggle run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrientationResult {
    /// Undirected body axis, degrees in `[0, 180)`.
    pub axis_deg: f64,
    /// Disambiguated direction, degrees in `[0, 360)`;
    /// `direction mod 180 == axis`.
    pub direction_deg: f64,
    /// First-to-second eigenvalue ratio of the weighted PCA.
    pub confidence: f64,
}

/// Signed per-pixel difference `current - previous` (range `[-255, 255]`).
pub fn diff_image(current: &[u8], previous: &[u8]) -> Result<Vec<f64>, OrientationError> {
    if current.len() != previous.len() {
        return Err(OrientationError::DimensionMismatch(
            current.len(),
            previous.len(),
        ));
    }
    Ok(current
        .iter()
        .zip(previous)
        .map(|(&a, &b)| f64::from(a) - f64::from(b))
        .collect())
}

/// Sum of the DC-centered power spectra of all consecutive difference
/// images in the stack.
pub fn accumulate_spectrum(stack: &SnippetStack) -> Result<Vec<f64>, OrientationError> {
    let count = stack.frame_count();
    if count < 2 {
        return Err(OrientationError::StackTooShort(count));
    }
    let (w, h) = (stack.width() as usize, stack.height() as usize);
    let mut acc = vec![0.0_f64; w * h];
    for t in 1..count {
        let diff = diff_image(stack.frame(t), stack.frame(t - 1))?;
        let ps = fft::power_spectrum_centered(&diff, w, h);
        for (a, p) in acc.iter_mut().zip(&ps) {
            *a += p;
        }
    }
    Ok(acc)
}

/// The radial Mexican-hat profile: a difference of Gaussians in the
/// distance from the ring of radius `k`, amplitude-coupled so the peak
/// (value `1 - σi/σo`) sits exactly on the ring.
pub fn dog_profile(radius: f64, cfg: &BandpassConfig) -> f64 {
    let k = cfg.expected_radius();
    let (si, so) = cfg.sigmas();
    let d = radius - k;
    (-d * d / (2.0 * si * si)).exp() - (si / so) * (-d * d / (2.0 * so * so)).exp()
}

/// Pointwise multiply a DC-centered spectrum with the DoG ring; negative
/// products are clamped to zero.
pub fn dog_bandpass(spectrum: &[f64], width: usize, height: usize, cfg: &BandpassConfig) -> Vec<f64> {
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    let mut out = vec![0.0; spectrum.len()];
    for y in 0..height {
        for x in 0..width {
            let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            out[y * width + x] = (spectrum[y * width + x] * dog_profile(r, cfg)).max(0.0);
        }
    }
    out
}

/// Weighted PCA of the DC-centered frequency coordinates.
///
/// Returns the body-axis angle (first eigenvector direction + 90°, mapped
/// to `[0, 180)`) and the eigenvalue ratio as confidence. The spectrum of a
/// real image is point-symmetric about DC, so the weighted mean is zero
/// and the covariance is taken about the center directly.
pub fn principal_axis(
    spectrum: &[f64],
    width: usize,
    height: usize,
) -> Result<(f64, f64), OrientationError> {
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    let (mut sxx, mut sxy, mut syy, mut total) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for y in 0..height {
        for x in 0..width {
            let w = spectrum[y * width + x];
            if w <= 0.0 {
                continue;
            }
            let u = x as f64 - cx;
            let v = y as f64 - cy;
            sxx += w * u * u;
            sxy += w * u * v;
            syy += w * v * v;
            total += w;
        }
    }
    if total <= 0.0 || (sxx + syy) <= 0.0 {
        return Err(OrientationError::ZeroSpectrum);
    }
    let trace = sxx + syy;
    let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let lambda1 = (trace + disc) / 2.0;
    let lambda2 = (trace - disc) / 2.0;
    // First eigenvector angle measured in image-style (u right, v down)
    // coordinates, then converted to the comb convention.
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let lateral = vector_angle(theta.cos(), theta.sin());
    let axis = wrap180(lateral + 90.0);
    let confidence = lambda1 / lambda2.max(1e-12 * lambda1.max(1e-300));
    Ok((axis, confidence))
}

/// Resolve the 180° ambiguity of `axis_deg` using the forward drift of the
/// detector trace: the mean of the first 10% of positions anchors vectors
/// to all later positions; a 10°-bin orientation histogram's modal bin is
/// averaged into the forward direction, and the axis-consistent direction
/// within 90° of it wins.
pub fn disambiguate(
    trace: &[(u64, f64, f64)],
    axis_deg: f64,
) -> Result<f64, OrientationError> {
    const MIN_TRACE: usize = 10;
    if trace.len() < MIN_TRACE {
        return Err(OrientationError::UnresolvedDirection {
            got: trace.len(),
            need: MIN_TRACE,
            axis_deg,
        });
    }
    let head = trace.len().div_ceil(10);
    let anchor_x = trace[..head].iter().map(|t| t.1).sum::<f64>() / head as f64;
    let anchor_y = trace[..head].iter().map(|t| t.2).sum::<f64>() / head as f64;

    let mut bins: [Vec<(f64, f64)>; 36] = std::array::from_fn(|_| Vec::new());
    for &(_, x, y) in &trace[head..] {
        let (dx, dy) = (x - anchor_x, y - anchor_y);
        if (dx * dx + dy * dy).sqrt() < 1e-9 {
            continue;
        }
        let angle = vector_angle(dx, dy);
        let bin = ((angle / 10.0).floor() as usize).min(35);
        bins[bin].push((dx, dy));
    }
    let modal = bins
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if bins[modal].is_empty() {
        return Err(OrientationError::UnresolvedDirection {
            got: trace.len(),
            need: MIN_TRACE,
            axis_deg,
        });
    }
    let (sx, sy) = bins[modal]
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(dx, dy)| (ax + dx, ay + dy));
    let forward = vector_angle(sx, sy);
    let axis_dir = wrap360(axis_deg);
    if abs_diff(axis_dir, forward) <= 90.0 {
        Ok(axis_dir)
    } else {
        Ok(wrap360(axis_dir + 180.0))
    }
}

/// Full orientation decoding of one run: accumulated spectrum, DoG
/// bandpass, weighted PCA, forward-motion disambiguation.
pub fn decode_orientation(
    trace: &[(u64, f64, f64)],
    stack: &SnippetStack,
    cfg: &BandpassConfig,
) -> Result<OrientationResult, OrientationError> {
    cfg.validate()?;
    let spectrum = accumulate_spectrum(stack)?;
    let (w, h) = (stack.width() as usize, stack.height() as usize);
    let filtered = dog_bandpass(&spectrum, w, h, cfg);
    let (axis_deg, confidence) = principal_axis(&filtered, w, h)?;
    let direction_deg = disambiguate(trace, axis_deg)?;
    Ok(OrientationResult {
        axis_deg,
        direction_deg,
        confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::unit_vector;

    fn stack_from(frames: Vec<Vec<u8>>, size: u32) -> SnippetStack {
        SnippetStack::from_frames(size, size, frames)
    }

    /// Render a Gaussian ellipse into a size x size frame.
    fn ellipse_frame(size: usize, cx: f64, cy: f64, dir_deg: f64, a: f64, b: f64) -> Vec<u8> {
        let (ux, uy) = unit_vector(dir_deg);
        let (vx, vy) = unit_vector(dir_deg + 90.0);
        let mut out = vec![20u8; size * size];
        for y in 0..size {
            for x in 0..size {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let du = (dx * ux + dy * uy) / a;
                let dv = (dx * vx + dy * vy) / b;
                let rho2 = du * du + dv * dv;
                if rho2 < 9.0 {
                    out[y * size + x] =
                        (20.0 + 160.0 * (-rho2).exp()).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        out
    }

    /// Stack of a bee at `dir_deg` waggling laterally around the center.
    fn waggle_stack(size: usize, dir_deg: f64, frames: usize, amplitude: f64) -> SnippetStack {
        let (lx, ly) = unit_vector(dir_deg + 90.0);
        let c = size as f64 / 2.0;
        let mut stack = SnippetStack::new(size as u32, size as u32);
        for t in 0..frames {
            let osc = amplitude * (std::f64::consts::TAU * 13.0 * t as f64 / 100.0).sin();
            stack.push_frame(&ellipse_frame(
                size,
                c + lx * osc,
                c + ly * osc,
                dir_deg,
                10.5,
                4.5,
            ));
        }
        stack
    }

    #[test]
    fn diff_of_equal_frames_is_zero_and_antisymmetric() {
        let a: Vec<u8> = (0..16).collect();
        let b: Vec<u8> = (0..16).rev().collect();
        assert!(diff_image(&a, &a).unwrap().iter().all(|&v| v == 0.0));
        let ab = diff_image(&a, &b).unwrap();
        let ba = diff_image(&b, &a).unwrap();
        assert!(ab.iter().zip(&ba).all(|(x, y)| x == &-y));
        assert!(diff_image(&a, &b[..8]).is_err());
    }

    #[test]
    fn shifted_ellipse_leaves_an_aligned_lobe_pair() {
        // Lateral shift by 5 px: the positive and negative lobes of the
        // difference image separate along the motion direction.
        let size = 50;
        let dir = 30.0;
        let (lx, ly) = unit_vector(dir + 90.0);
        let c = 25.0;
        let f0 = ellipse_frame(size, c, c, dir, 10.5, 4.5);
        let f1 = ellipse_frame(size, c + 5.0 * lx, c + 5.0 * ly, dir, 10.5, 4.5);
        let d = diff_image(&f1, &f0).unwrap();
        let mut pos = (0.0, 0.0, 0.0);
        let mut neg = (0.0, 0.0, 0.0);
        for y in 0..size {
            for x in 0..size {
                let v = d[y * size + x];
                if v > 0.0 {
                    pos = (pos.0 + v * x as f64, pos.1 + v * y as f64, pos.2 + v);
                } else if v < 0.0 {
                    neg = (neg.0 - v * x as f64, neg.1 - v * y as f64, neg.2 - v);
                }
            }
        }
        let lobe_dx = pos.0 / pos.2 - neg.0 / neg.2;
        let lobe_dy = pos.1 / pos.2 - neg.1 / neg.2;
        let lobe_angle = vector_angle(lobe_dx, lobe_dy);
        let motion = wrap180(dir + 90.0);
        assert!(
            abs_diff(wrap180(lobe_angle), motion).min(abs_diff(wrap180(lobe_angle) + 180.0, motion + 180.0)) < 5.0,
            "lobe pair at {lobe_angle}, motion axis {motion}"
        );
    }

    #[test]
    fn identical_frames_accumulate_to_zero() {
        let f = ellipse_frame(50, 25.0, 25.0, 0.0, 10.5, 4.5);
        let stack = stack_from(vec![f.clone(), f.clone(), f], 50);
        let acc = accumulate_spectrum(&stack).unwrap();
        assert!(acc.iter().all(|&v| v == 0.0));
        assert!(matches!(
            accumulate_spectrum(&stack_from(vec![vec![0; 2500]], 50)),
            Err(OrientationError::StackTooShort(1))
        ));
    }

    #[test]
    fn grating_difference_peaks_orthogonal_to_stripes() {
        // Vertical stripes (variation along x): frequency peaks on the
        // horizontal frequency axis at +-k. Verified against the naive
        // closed-form expectation of a pure cosine grating.
        let size = 50;
        let k = 5.0;
        let grating = |phase: f64| -> Vec<u8> {
            (0..size * size)
                .map(|i| {
                    let x = (i % size) as f64;
                    (128.0 + 60.0 * (std::f64::consts::TAU * k * x / size as f64 + phase).cos())
                        .round() as u8
                })
                .collect()
        };
        let stack = stack_from(vec![grating(0.0), grating(1.2)], size as u32);
        let acc = accumulate_spectrum(&stack).unwrap();
        let mut best = (0usize, 0.0);
        for (i, &v) in acc.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        let (bx, by) = ((best.0 % size) as i64 - 25, (best.0 / size) as i64 - 25);
        assert_eq!(by, 0, "peak on the horizontal frequency axis");
        assert_eq!(bx.abs(), 5, "peak at radius k");
    }

    #[test]
    fn spectrum_is_translation_invariant() {
        let size = 50;
        let dir = 72.0;
        let make = |cx: f64, cy: f64| {
            let (lx, ly) = unit_vector(dir + 90.0);
            let mut stack = SnippetStack::new(size as u32, size as u32);
            for t in 0..12 {
                let osc = 6.0 * (std::f64::consts::TAU * 13.0 * t as f64 / 100.0).sin();
                stack.push_frame(&ellipse_frame(
                    size as usize,
                    cx + lx * osc,
                    cy + ly * osc,
                    dir,
                    8.0,
                    3.5,
                ));
            }
            accumulate_spectrum(&stack).unwrap()
        };
        // Integer translation of the same pattern inside the snippet.
        let a = make(20.0, 22.0);
        let b = make(28.0, 27.0);
        let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(diff / na < 1e-6, "relative difference {}", diff / na);
    }

    #[test]
    fn dog_defaults_follow_the_displacement_formula() {
        let cfg5 = BandpassConfig {
            displacement_px: 5.0,
            ..BandpassConfig::default()
        };
        assert!((cfg5.expected_radius() - 5.0).abs() < 1e-12);
        let cfg7 = BandpassConfig {
            displacement_px: 7.0,
            ..BandpassConfig::default()
        };
        assert!((cfg7.expected_radius() - 50.0 / 14.0).abs() < 1e-12);
        assert!((cfg7.expected_radius() - 3.5714).abs() < 1e-4);
    }

    #[test]
    fn dog_preserves_the_ring_and_kills_dc() {
        let cfg = BandpassConfig::default();
        let k = cfg.expected_radius();
        let (si, so) = cfg.sigmas();
        let peak = 1.0 - si / so;
        assert!((dog_profile(k, &cfg) - peak).abs() < 1e-12);
        // DC: the profile is negative there (clamped to zero on use),
        // attenuation far stronger than the 1%-of-peak requirement.
        let dc = dog_profile(0.0, &cfg).max(0.0);
        assert!(dc <= 0.01 * peak);

        // Impulse at radius k passes with peak gain; DC impulse is removed.
        let size = 50;
        let mut spec = vec![0.0; size * size];
        let kpix = k.round() as usize;
        spec[25 * size + 25 + kpix] = 2.0;
        spec[25 * size + 25] = 2.0;
        let filtered = dog_bandpass(&spec, size, size, &cfg);
        assert_eq!(filtered[25 * size + 25], 0.0);
        let got = filtered[25 * size + 25 + kpix];
        let want = 2.0 * dog_profile(kpix as f64, &cfg);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn impulse_pairs_give_the_forced_axes() {
        let size = 50;
        let k = 5usize;
        // Impulses at (row +-k, col 0): vertical frequency axis.
        let mut vertical = vec![0.0; size * size];
        vertical[(25 + k) * size + 25] = 1.0;
        vertical[(25 - k) * size + 25] = 1.0;
        let (axis, conf) = principal_axis(&vertical, size, size).unwrap();
        assert!((axis - 90.0).abs() < 1e-9, "axis {axis}");
        assert!(conf > 1e6);

        // Impulses at (0, col +-k): horizontal frequency axis.
        let mut horizontal = vec![0.0; size * size];
        horizontal[25 * size + 25 + k] = 1.0;
        horizontal[25 * size + 25 - k] = 1.0;
        let (axis, _) = principal_axis(&horizontal, size, size).unwrap();
        assert!(axis.abs() < 1e-9 || (axis - 180.0).abs() < 1e-9, "axis {axis}");

        assert!(matches!(
            principal_axis(&vec![0.0; size * size], size, size),
            Err(OrientationError::ZeroSpectrum)
        ));
    }

    #[test]
    fn principal_axis_rotation_equivariance_on_impulse_pairs() {
        // Subpixel impulse pairs (bilinear splat) at exact angles.
        let size = 50;
        let splat = |spec: &mut [f64], x: f64, y: f64| {
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (fx, fy) = (x - x.floor(), y - y.floor());
            spec[y0 * size + x0] += (1.0 - fx) * (1.0 - fy);
            spec[y0 * size + x0 + 1] += fx * (1.0 - fy);
            spec[(y0 + 1) * size + x0] += (1.0 - fx) * fy;
            spec[(y0 + 1) * size + x0 + 1] += fx * fy;
        };
        for theta in [0.0, 20.0, 45.0, 77.0, 110.0, 155.0] {
            let (dx, dy) = unit_vector(theta);
            let mut spec = vec![0.0; size * size];
            for sign in [-1.0, 1.0] {
                splat(&mut spec, 25.0 + sign * 15.0 * dx, 25.0 + sign * 15.0 * dy);
            }
            let (axis, _) = principal_axis(&spec, size, size).unwrap();
            // Impulse pair along direction theta: lateral axis theta, body
            // axis theta + 90.
            let want = wrap180(theta + 90.0);
            let err = (axis - want).abs().min(180.0 - (axis - want).abs());
            assert!(err < 1.0, "theta {theta}: axis {axis} want {want}");
        }
    }

    #[test]
    fn straight_traces_disambiguate_and_reverse_flips() {
        // Trace moving straight up.
        let up: Vec<(u64, f64, f64)> =
            (0..30).map(|i| (i, 25.0, 40.0 - i as f64)).collect();
        assert!((disambiguate(&up, 0.0).unwrap() - 0.0).abs() < 1e-9);
        let mut down = up.clone();
        down.reverse();
        assert!((disambiguate(&down, 0.0).unwrap() - 180.0).abs() < 1e-9);
        // Short traces report the axis in the error.
        match disambiguate(&up[..5], 34.0) {
            Err(OrientationError::UnresolvedDirection { axis_deg, .. }) => {
                assert_eq!(axis_deg, 34.0)
            }
            other => panic!("expected unresolved, got {other:?}"),
        }
    }

    #[test]
    fn decode_recovers_scripted_angles() {
        for dir in [0.0, 37.0, 215.0] {
            let stack = waggle_stack(50, dir, 55, 6.0);
            let (fx, fy) = unit_vector(dir);
            let trace: Vec<(u64, f64, f64)> = (0..55)
                .map(|i| (i, 60.0 + fx * 0.5 * i as f64, 60.0 + fy * 0.5 * i as f64))
                .collect();
            let res = decode_orientation(&trace, &stack, &BandpassConfig::default()).unwrap();
            assert!(
                abs_diff(res.direction_deg, dir) < 3.0,
                "dir {dir}: decoded {} (axis {})",
                res.direction_deg,
                res.axis_deg
            );
            assert!(abs_diff(res.direction_deg % 180.0, res.axis_deg) < 1e-9);
            assert!(res.confidence >= 1.0);
        }
    }

    #[test]
    fn decode_is_equivariant_under_quarter_rotation() {
        let dir = 25.0;
        let size = 50usize;
        let stack = waggle_stack(size, dir, 40, 6.0);
        let (fx, fy) = unit_vector(dir);
        let trace: Vec<(u64, f64, f64)> = (0..40)
            .map(|i| (i, 60.0 + fx * 0.5 * i as f64, 60.0 + fy * 0.5 * i as f64))
            .collect();
        let base = decode_orientation(&trace, &stack, &BandpassConfig::default()).unwrap();

        // Rotate snippets and trace by 90° clockwise:
        // (x, y) -> (S - 1 - y, x).
        let mut rotated = SnippetStack::new(size as u32, size as u32);
        for f in stack.frames() {
            let mut r = vec![0u8; size * size];
            for y in 0..size {
                for x in 0..size {
                    r[x * size + (size - 1 - y)] = f[y * size + x];
                }
            }
            rotated.push_frame(&r);
        }
        let trace_rot: Vec<(u64, f64, f64)> = trace
            .iter()
            .map(|&(i, x, y)| (i, 200.0 - y, x))
            .collect();
        let turned = decode_orientation(&trace_rot, &rotated, &BandpassConfig::default()).unwrap();
        assert!(
            abs_diff(turned.direction_deg, base.direction_deg + 90.0) < 2.0,
            "base {} turned {}",
            base.direction_deg,
            turned.direction_deg
        );
    }
}
