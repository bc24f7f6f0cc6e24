//! The online attention detector: layers 0–2 plus snippet export.

use chrono::{DateTime, Duration, Utc};

use super::grid::PixelWindowGrid;
use super::runs::{RunAssembler, RunTrace};
use super::snippets::crop_snippet;
use super::{cluster_active, AttentionConfig, AttentionError, WaggleRun};
use crate::records::SnippetStack;

/// Bounded ring of raw frames so snippets can be cut when a run closes.
struct FrameRing {
    capacity: usize,
    frames: Vec<Vec<u8>>,
    next_index: u64,
}

impl FrameRing {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            frames: Vec::with_capacity(capacity),
            next_index: 0,
        }
    }

    fn push(&mut self, frame: &[u8]) {
        let slot = (self.next_index % self.capacity as u64) as usize;
        if self.frames.len() <= slot {
            self.frames.push(frame.to_vec());
        } else {
            self.frames[slot].clear();
            self.frames[slot].extend_from_slice(frame);
        }
        self.next_index += 1;
    }

    fn oldest_kept(&self) -> u64 {
        self.next_index.saturating_sub(self.frames.len() as u64)
    }

    fn get(&self, index: u64) -> Option<&[u8]> {
        if index >= self.next_index || index < self.oldest_kept() {
            return None;
        }
        Some(&self.frames[(index % self.capacity as u64) as usize])
    }
}

/// Streaming waggle-run detector over a single frame source.
///
/// Feed frames in order with [`Detector::process_frame`]; confirmed runs are
/// returned as they close. Call [`Detector::finish`] once the stream ends to
/// flush candidates that are still open.
pub struct Detector {
    cfg: AttentionConfig,
    width: usize,
    height: usize,
    grid: PixelWindowGrid,
    assembler: RunAssembler,
    ring: FrameRing,
    frame_index: u64,
    start_utc: DateTime<Utc>,
}

impl Detector {
    pub fn new(
        width: usize,
        height: usize,
        cfg: AttentionConfig,
        start_utc: DateTime<Utc>,
    ) -> Result<Self, AttentionError> {
        cfg.validate()?;
        Ok(Self {
            grid: PixelWindowGrid::new(width, height, &cfg)?,
            assembler: RunAssembler::new(cfg.clone()),
            ring: FrameRing::new(cfg.frame_buffer),
            frame_index: 0,
            start_utc,
            width,
            height,
            cfg,
        })
    }

    pub fn frames_processed(&self) -> u64 {
        self.frame_index
    }

    pub fn process_frame(&mut self, frame: &[u8]) -> Result<Vec<WaggleRun>, AttentionError> {
        self.ring.push(frame);
        let actives = self.grid.step_frame(frame)?;
        let index = self.frame_index;
        self.frame_index += 1;

        let points: Vec<(f64, f64)> = actives
            .iter()
            .map(|&(x, y)| (f64::from(x), f64::from(y)))
            .collect();
        let centroids = cluster_active(&points, self.cfg.d_max1, self.cfg.c_min1);
        let closed = self.assembler.observe(index, &centroids)?;
        self.export_all(closed)
    }

    pub fn finish(&mut self) -> Result<Vec<WaggleRun>, AttentionError> {
        let closed = self.assembler.finish();
        self.export_all(closed)
    }

    fn export_all(&self, closed: Vec<RunTrace>) -> Result<Vec<WaggleRun>, AttentionError> {
        closed.into_iter().map(|t| self.export_run(t)).collect()
    }

    fn export_run(&self, trace: RunTrace) -> Result<WaggleRun, AttentionError> {
        let size = self.cfg.snippet_size;
        let mut snippets = SnippetStack::new(size as u32, size as u32);
        for &(frame, x, y) in &trace.trace {
            let raw = self
                .ring
                .get(frame)
                .ok_or(AttentionError::FramesEvicted {
                    needed: frame,
                    oldest: self.ring.oldest_kept(),
                })?;
            snippets.push_frame(&crop_snippet(raw, self.width, self.height, x, y, size));
        }
        let start_frame = trace.trace.first().map(|t| t.0).unwrap_or(0);
        let start_utc = self.start_utc
            + Duration::microseconds(
                (start_frame as f64 / self.cfg.sample_rate_hz * 1e6).round() as i64,
            );
        Ok(WaggleRun {
            id: trace.id,
            start_frame,
            start_utc,
            duration_ms: trace.duration_ms,
            trace: trace.trace,
            snippets,
        })
    }
}
