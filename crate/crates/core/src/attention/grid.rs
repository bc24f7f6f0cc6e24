//! Layer 0: the per-pixel sliding-window grid of dot detectors.

use rayon::prelude::*;

use super::score::{dd_score, normalize_window_into, ToneBasis};
use super::{AttentionConfig, AttentionError};

/// Per-pixel ring buffers of the last `b` intensity values plus the
/// activation flags recomputed on every frame once the buffers are full.
///
/// The history is stored as `b` full frame planes in ring order, so a
/// pixel's window is gathered by indexing the same offset in each plane.
pub struct PixelWindowGrid {
    width: usize,
    height: usize,
    b: usize,
    planes: Vec<Vec<f64>>,
    frames_seen: u64,
    active: Vec<bool>,
    bases: Vec<ToneBasis>,
    t_h: f64,
}

impl PixelWindowGrid {
    pub fn new(width: usize, height: usize, cfg: &AttentionConfig) -> Result<Self, AttentionError> {
        cfg.validate()?;
        let bases = cfg
            .waggle_band_hz
            .iter()
            .map(|&r| ToneBasis::new(cfg.b, r, cfg.sample_rate_hz))
            .collect();
        Ok(Self {
            width,
            height,
            b: cfg.b,
            planes: vec![vec![0.0; width * height]; cfg.b],
            frames_seen: 0,
            active: vec![false; width * height],
            bases,
            t_h: cfg.t_h,
        })
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    /// True once every ring buffer holds `b` samples.
    pub fn is_warm(&self) -> bool {
        self.frames_seen >= self.b as u64
    }

    /// Activation flag of pixel `(x, y)` after the last [`Self::step_frame`].
    pub fn is_active(&self, x: usize, y: usize) -> bool {
        self.active[y * self.width + x]
    }

    /// Push one frame, update every detector and return the coordinates of
    /// the active ones in row-major order.
    ///
    /// Scoring is data-parallel over rows; each pixel's arithmetic is
    /// independent, so the result is identical to sequential evaluation.
    pub fn step_frame(&mut self, frame: &[u8]) -> Result<Vec<(u32, u32)>, AttentionError> {
        if frame.len() != self.width * self.height {
            return Err(AttentionError::DimensionMismatch {
                expected: self.width * self.height,
                got: frame.len(),
            });
        }
        let write = (self.frames_seen % self.b as u64) as usize;
        for (dst, &src) in self.planes[write].iter_mut().zip(frame) {
            *dst = f64::from(src);
        }
        self.frames_seen += 1;

        if !self.is_warm() {
            // Detectors stay inactive while the buffers are underfull.
            return Ok(Vec::new());
        }

        let start = (self.frames_seen % self.b as u64) as usize;
        let b = self.b;
        let width = self.width;
        let planes = &self.planes;
        let bases = &self.bases;
        let t_h = self.t_h;

        // Plane order oldest → newest, precomputed so the inner loop avoids
        // the modulo.
        let order: Vec<&Vec<f64>> = (0..b).map(|m| &planes[(start + m) % b]).collect();

        let active_rows: Vec<Vec<u32>> = (0..self.height)
            .into_par_iter()
            .map(|y| {
                let row_off = y * width;
                let mut window = vec![0.0_f64; b];
                let mut normalized = vec![0.0_f64; b];
                let mut actives = Vec::new();
                for x in 0..width {
                    let idx = row_off + x;
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    for (w, plane) in window.iter_mut().zip(&order) {
                        let v = plane[idx];
                        *w = v;
                        min = min.min(v);
                        max = max.max(v);
                    }
                    if max == min {
                        continue;
                    }
                    normalize_window_into(&window, &mut normalized);
                    if bases.iter().any(|basis| dd_score(&normalized, basis) > t_h) {
                        actives.push(x as u32);
                    }
                }
                actives
            })
            .collect();

        self.active.fill(false);
        let mut result = Vec::new();
        for (y, row) in active_rows.iter().enumerate() {
            let row_off = y * width;
            for &x in row {
                self.active[row_off + x as usize] = true;
                result.push((x, y as u32));
            }
        }
        Ok(result)
    }
}
