//! Frame sources and perspective rectification.
//!
//! Supported sources: directories of numbered binary PGM (P5) images, the
//! raw planar container ([`raw`]), and in-memory streams (used for
//! synthetic videos; see [`crate::synth`]). [`open_source`] picks the
//! reader from the path shape; synthetic scene files are dispatched one
//! level up in [`crate::pipeline`] because rendering needs the generator.

pub mod homography;
mod pgm;
pub mod raw;

pub use homography::{estimate_homography, rectify, Homography};
pub use pgm::{read_pgm, write_pgm};

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unreadable source {0}")]
    UnreadableSource(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("degenerate point configuration: {0}")]
    Degenerate(String),
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A sequential source of equally sized 8-bit grayscale frames.
///
/// Frames are delivered in strictly increasing index order with no
/// duplicates; re-opening the same source replays identical bytes.
pub trait FrameStream {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn sample_rate_hz(&self) -> f64;
    /// Read the next frame into `buf` (resized to `width * height`).
    /// Returns `false` at end of stream.
    fn next_frame(&mut self, buf: &mut Vec<u8>) -> Result<bool, IngestError>;
}

/// An in-memory stream, used for synthetic videos and tests.
pub struct MemoryStream {
    width: usize,
    height: usize,
    sample_rate_hz: f64,
    frames: Vec<Vec<u8>>,
    cursor: usize,
}

impl MemoryStream {
    pub fn new(width: usize, height: usize, sample_rate_hz: f64, frames: Vec<Vec<u8>>) -> Self {
        for f in &frames {
            assert_eq!(f.len(), width * height, "memory stream frame size");
        }
        Self {
            width,
            height,
            sample_rate_hz,
            frames,
            cursor: 0,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Restart playback from the first frame.
    pub fn rewind(&mut self) {
        self.cursor = 0;
    }
}

impl FrameStream for MemoryStream {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    fn next_frame(&mut self, buf: &mut Vec<u8>) -> Result<bool, IngestError> {
        if self.cursor >= self.frames.len() {
            return Ok(false);
        }
        buf.clear();
        buf.extend_from_slice(&self.frames[self.cursor]);
        self.cursor += 1;
        Ok(true)
    }
}

/// Stream over a directory of numbered PGM files, in lexicographic order of
/// the zero-padded file names.
pub struct PgmDirStream {
    width: usize,
    height: usize,
    sample_rate_hz: f64,
    files: Vec<std::path::PathBuf>,
    cursor: usize,
}

impl PgmDirStream {
    pub fn open(dir: &Path, sample_rate_hz: f64) -> Result<Self, IngestError> {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| io_err(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(IngestError::UnreadableSource(format!(
                "no .pgm files in {}",
                dir.display()
            )));
        }
        let (width, height, _) = read_pgm(&files[0])?;
        Ok(Self {
            width,
            height,
            sample_rate_hz,
            files,
            cursor: 0,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.files.len()
    }
}

impl FrameStream for PgmDirStream {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    fn next_frame(&mut self, buf: &mut Vec<u8>) -> Result<bool, IngestError> {
        if self.cursor >= self.files.len() {
            return Ok(false);
        }
        let (w, h, data) = read_pgm(&self.files[self.cursor])?;
        if w != self.width || h != self.height {
            return Err(IngestError::Format(format!(
                "{}: frame is {w}x{h}, stream is {}x{}",
                self.files[self.cursor].display(),
                self.width,
                self.height
            )));
        }
        self.cursor += 1;
        *buf = data;
        Ok(true)
    }
}

/// Open a recorded source: a directory of PGM frames or a raw container
/// file. `sample_rate_hz` applies to PGM directories, which carry no rate
/// metadata; raw containers use the rate in their header.
pub fn open_source(
    path: &Path,
    sample_rate_hz: f64,
) -> Result<Box<dyn FrameStream>, IngestError> {
    if path.is_dir() {
        return Ok(Box::new(PgmDirStream::open(path, sample_rate_hz)?));
    }
    if path.is_file() {
        return Ok(Box::new(raw::RawStream::open(path)?));
    }
    Err(IngestError::UnreadableSource(format!(
        "{} is neither a directory nor a file",
        path.display()
    )))
}

/// Drain a stream into memory (small sources and tests).
pub fn collect_frames(stream: &mut dyn FrameStream) -> Result<Vec<Vec<u8>>, IngestError> {
    let mut frames = Vec::new();
    let mut buf = Vec::new();
    while stream.next_frame(&mut buf)? {
        frames.push(buf.clone());
    }
    Ok(frames)
}
