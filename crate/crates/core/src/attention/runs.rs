//! Layer 2: temporal assembly of dancer positions into waggle-run candidates.

use super::{AttentionConfig, AttentionError};

/// A closed candidate that passed the confirmation criteria
/// (`>= c_min2` detections, duration `>= min_waggle_ms`).
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub id: u64,
    /// `(frame, x, y)` per detection, in frame order.
    pub trace: Vec<(u64, f64, f64)>,
    pub duration_ms: f64,
}

#[derive(Debug)]
struct Candidate {
    id: u64,
    trace: Vec<(u64, f64, f64)>,
    last_frame: u64,
}

/// Matches per-frame dancer positions against open candidates.
///
/// Every centroid is appended to the nearest open candidate within
/// `d_max2` of the candidate's last position (ties broken towards the
/// lowest candidate id, one detection per candidate per frame), or seeds
/// a new candidate. Candidates silent for more than `g_max2` frames are
/// closed and either confirmed as runs or discarded.
pub struct RunAssembler {
    cfg: AttentionConfig,
    open: Vec<Candidate>,
    next_id: u64,
    last_observed: Option<u64>,
}

impl RunAssembler {
    pub fn new(cfg: AttentionConfig) -> Self {
        Self {
            cfg,
            open: Vec::new(),
            next_id: 0,
            last_observed: None,
        }
    }

    pub fn open_candidates(&self) -> usize {
        self.open.len()
    }

    /// Process the centroids detected in frame `frame_index`. Frames must
    /// arrive in strictly increasing order (gap frames may be skipped
    /// entirely). Returns the confirmed runs closed by this observation.
    pub fn observe(
        &mut self,
        frame_index: u64,
        centroids: &[(f64, f64)],
    ) -> Result<Vec<RunTrace>, AttentionError> {
        if let Some(last) = self.last_observed {
            if frame_index <= last {
                return Err(AttentionError::OutOfOrderFrame {
                    last,
                    got: frame_index,
                });
            }
        }
        self.last_observed = Some(frame_index);

        let mut closed = Vec::new();
        let mut i = 0;
        while i < self.open.len() {
            if frame_index - self.open[i].last_frame > self.cfg.g_max2 {
                let candidate = self.open.remove(i);
                if let Some(run) = self.confirm(candidate) {
                    closed.push(run);
                }
            } else {
                i += 1;
            }
        }

        let mut updated = vec![false; self.open.len()];
        for &(x, y) in centroids {
            let mut best: Option<(usize, f64)> = None;
            for (idx, candidate) in self.open.iter().enumerate() {
                if updated[idx] {
                    continue;
                }
                let (_, lx, ly) = *candidate.trace.last().expect("candidate has a trace");
                let d = ((x - lx).powi(2) + (y - ly).powi(2)).sqrt();
                if d > self.cfg.d_max2 {
                    continue;
                }
                // Strictly-closer wins; equal distance keeps the earlier
                // (lower-id) candidate since open is ordered by id.
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((idx, d));
                }
            }
            match best {
                Some((idx, _)) => {
                    self.open[idx].trace.push((frame_index, x, y));
                    self.open[idx].last_frame = frame_index;
                    updated[idx] = true;
                }
                None => {
                    self.open.push(Candidate {
                        id: self.next_id,
                        trace: vec![(frame_index, x, y)],
                        last_frame: frame_index,
                    });
                    self.next_id += 1;
                    updated.push(true);
                }
            }
        }
        Ok(closed)
    }

    /// Close all remaining candidates (end of stream).
    pub fn finish(&mut self) -> Vec<RunTrace> {
        let mut closed = Vec::new();
        for candidate in std::mem::take(&mut self.open) {
            if let Some(run) = self.confirm(candidate) {
                closed.push(run);
            }
        }
        closed
    }

    fn confirm(&self, candidate: Candidate) -> Option<RunTrace> {
        if candidate.trace.len() < self.cfg.c_min2 {
            return None;
        }
        let first = candidate.trace.first()?.0;
        let last = candidate.trace.last()?.0;
        let duration_ms = (last - first + 1) as f64 / self.cfg.sample_rate_hz * 1000.0;
        if duration_ms < self.cfg.min_waggle_ms {
            return None;
        }
        Some(RunTrace {
            id: candidate.id,
            trace: candidate.trace,
            duration_ms,
        })
    }
}
