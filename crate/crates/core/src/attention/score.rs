//! Per-pixel frequency scoring for the dot detectors.
//!
//! A pixel's last `b` intensity values are min/max-normalized to `[-1, 1]`
//! and projected onto a sinusoid pair at a test frequency `r`. The score is
//! the squared magnitude of that projection (the single-bin DFT power):
//!
//! ```text
//! score(w, r) = (Σₘ w(m)·cos(2πr·m/s_r))² + (Σₘ w(m)·sin(2πr·m/s_r))²
//! ```
//!
//! with `m = 1..=b` indexing the window from oldest to newest sample.

/// Precomputed sinusoid pair for one test frequency.
///
/// Building the tables once and reusing them across all pixels keeps the
/// per-frame scoring free of trigonometric calls while producing bit-equal
/// results to evaluating the sinusoids inline.
#[derive(Debug, Clone)]
pub struct ToneBasis {
    freq_hz: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ToneBasis {
    /// Tables of `cos(2πr·m/s_r)` and `sin(2πr·m/s_r)` for `m = 1..=b`.
    pub fn new(b: usize, freq_hz: f64, sample_rate_hz: f64) -> Self {
        let mut cos = Vec::with_capacity(b);
        let mut sin = Vec::with_capacity(b);
        for m in 1..=b {
            let phase = 2.0 * std::f64::consts::PI * freq_hz * m as f64 / sample_rate_hz;
            cos.push(phase.cos());
            sin.push(phase.sin());
        }
        Self { freq_hz, cos, sin }
    }

    pub fn freq_hz(&self) -> f64 {
        self.freq_hz
    }

    pub fn window_len(&self) -> usize {
        self.cos.len()
    }
}

/// Affine rescale of a raw window mapping `min → -1` and `max → +1`.
/// A constant window maps to all zeros.
pub fn normalize_window(raw: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; raw.len()];
    normalize_window_into(raw, &mut out);
    out
}

/// In-place variant of [`normalize_window`] for preallocated buffers.
pub fn normalize_window_into(raw: &[f64], out: &mut [f64]) {
    debug_assert_eq!(raw.len(), out.len());
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in raw {
        min = min.min(v);
        max = max.max(v);
    }
    if max == min {
        out.fill(0.0);
        return;
    }
    let scale = 2.0 / (max - min);
    for (o, &v) in out.iter_mut().zip(raw) {
        *o = (v - min) * scale - 1.0;
    }
}

/// Squared projection of a normalized window onto the sinusoid pair of
/// `basis`. Pure function; the window must already be normalized.
pub fn dd_score(window: &[f64], basis: &ToneBasis) -> f64 {
    debug_assert_eq!(window.len(), basis.cos.len());
    let mut c = 0.0_f64;
    let mut s = 0.0_f64;
    for ((&w, &co), &si) in window.iter().zip(&basis.cos).zip(&basis.sin) {
        c += w * co;
        s += w * si;
    }
    c * c + s * s
}

/// Convenience wrapper that builds the basis on the fly.
pub fn dd_score_at(window: &[f64], freq_hz: f64, sample_rate_hz: f64) -> f64 {
    dd_score(window, &ToneBasis::new(window.len(), freq_hz, sample_rate_hz))
}
