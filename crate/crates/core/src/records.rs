//! On-disk interchange formats between the pipeline stages.
//!
//! * Run records: one JSON object per line (`runs.jsonl`). The detect stage
//!   writes the base fields; filter and orientation append theirs, so every
//!   stage can be re-run from the previous stage's file.
//! * Snippet stacks: raw 8-bit frames with a 16-byte header
//!   (`magic "SNPS", frame count, width, height`, little-endian u32 each).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SNIPPET_MAGIC: [u8; 4] = *b"SNPS";

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad snippet stack {path}: {reason}")]
    BadStack { path: String, reason: String },
    #[error("bad run record at {path}:{line}: {source}")]
    BadRecord {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> RecordError {
    RecordError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A sequence of equally sized 8-bit grayscale snippets.
#[derive(Debug, Clone, PartialEq)]
pub struct SnippetStack {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl SnippetStack {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: Vec::new(),
        }
    }

    pub fn from_frames(width: u32, height: u32, frames: Vec<Vec<u8>>) -> Self {
        let mut stack = Self::new(width, height);
        for f in frames {
            stack.push_frame(&f);
        }
        stack
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn frame_len(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn frame_count(&self) -> usize {
        if self.frame_len() == 0 {
            0
        } else {
            self.data.len() / self.frame_len()
        }
    }

    pub fn frame(&self, i: usize) -> &[u8] {
        let n = self.frame_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn push_frame(&mut self, frame: &[u8]) {
        assert_eq!(frame.len(), self.frame_len(), "snippet frame size mismatch");
        self.data.extend_from_slice(frame);
    }

    pub fn frames(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.frame_len())
    }

    pub fn write_to(&self, path: &Path) -> Result<(), RecordError> {
        let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
        let mut header = [0u8; 16];
        header[0..4].copy_from_slice(&SNIPPET_MAGIC);
        header[4..8].copy_from_slice(&(self.frame_count() as u32).to_le_bytes());
        header[8..12].copy_from_slice(&self.width.to_le_bytes());
        header[12..16].copy_from_slice(&self.height.to_le_bytes());
        out.write_all(&header).map_err(|e| io_err(path, e))?;
        out.write_all(&self.data).map_err(|e| io_err(path, e))?;
        out.flush().map_err(|e| io_err(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self, RecordError> {
        let bad = |reason: String| RecordError::BadStack {
            path: path.display().to_string(),
            reason,
        };
        let mut file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
        let mut header = [0u8; 16];
        file.read_exact(&mut header).map_err(|e| io_err(path, e))?;
        if header[0..4] != SNIPPET_MAGIC {
            return Err(bad("missing SNPS magic".into()));
        }
        let count = u32::from_le_bytes(header[4..8].try_into().unwrap());
        let width = u32::from_le_bytes(header[8..12].try_into().unwrap());
        let height = u32::from_le_bytes(header[12..16].try_into().unwrap());
        let expected = count as usize * (width * height) as usize;
        let mut data = Vec::with_capacity(expected);
        file.read_to_end(&mut data).map_err(|e| io_err(path, e))?;
        if data.len() != expected {
            return Err(bad(format!(
                "payload {} bytes, header promises {expected}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

/// One waggle run as stored in the JSONL files. Optional fields are filled
/// in by the filter and orientation stages.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub id: u64,
    pub start_frame: u64,
    pub start_utc: DateTime<Utc>,
    pub duration_ms: f64,
    /// `[frame, x, y]` per detection.
    pub trace: Vec<(u64, f64, f64)>,
    /// Path of the snippet stack file, relative to the record file.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub snippet_file: Option<String>,
    /// Filter-network waggle probability.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_waggle: Option<f64>,
    /// Undirected body-axis angle, degrees in `[0, 180)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub axis_deg: Option<f64>,
    /// Disambiguated direction, degrees in `[0, 360)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direction_deg: Option<f64>,
    /// PCA eigenvalue ratio of the orientation estimate.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub confidence: Option<f64>,
}

impl RunRecord {
    /// Mean trace position (the run's comb location).
    pub fn mean_position(&self) -> (f64, f64) {
        let n = self.trace.len().max(1) as f64;
        let sx: f64 = self.trace.iter().map(|t| t.1).sum();
        let sy: f64 = self.trace.iter().map(|t| t.2).sum();
        (sx / n, sy / n)
    }

    /// End of the run in UTC (start + duration).
    pub fn end_utc(&self) -> DateTime<Utc> {
        self.start_utc + chrono::Duration::microseconds((self.duration_ms * 1000.0) as i64)
    }
}

pub fn write_jsonl(path: &Path, records: &[RunRecord]) -> Result<(), RecordError> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| RecordError::BadRecord {
            path: path.display().to_string(),
            line: 0,
            source: e,
        })?;
        out.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<RunRecord>, RecordError> {
    let file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut records = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| RecordError::BadRecord {
            path: path.display().to_string(),
            line: i + 1,
            source: e,
        })?;
        records.push(record);
    }
    Ok(records)
}
