//! Raw planar 8-bit frame container.
//!
//! Layout: a 16-byte header of four little-endian u32 values — width,
//! height, frames-per-second, frame count — followed by `frame count`
//! planes of `width * height` bytes each.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{io_err, FrameStream, IngestError};

pub const HEADER_LEN: u64 = 16;

/// Incremental writer; call [`RawWriter::finish`] to patch the frame count.
pub struct RawWriter {
    path: std::path::PathBuf,
    out: BufWriter<File>,
    width: u32,
    height: u32,
    fps: u32,
    frames: u32,
}

impl RawWriter {
    pub fn create(path: &Path, width: u32, height: u32, fps: u32) -> Result<Self, IngestError> {
        let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
        for v in [width, height, fps, 0u32] {
            out.write_all(&v.to_le_bytes()).map_err(|e| io_err(path, e))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            out,
            width,
            height,
            fps,
            frames: 0,
        })
    }

    pub fn write_frame(&mut self, frame: &[u8]) -> Result<(), IngestError> {
        if frame.len() != (self.width * self.height) as usize {
            return Err(IngestError::Format(format!(
                "frame has {} bytes, container is {}x{}",
                frame.len(),
                self.width,
                self.height
            )));
        }
        self.out
            .write_all(frame)
            .map_err(|e| io_err(&self.path, e))?;
        self.frames += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), IngestError> {
        self.out.flush().map_err(|e| io_err(&self.path, e))?;
        let mut file = self.out.into_inner().map_err(|e| {
            IngestError::Format(format!("flush failed: {e}"))
        })?;
        use std::io::Seek;
        file.seek(std::io::SeekFrom::Start(12))
            .map_err(|e| io_err(&self.path, e))?;
        file.write_all(&self.frames.to_le_bytes())
            .map_err(|e| io_err(&self.path, e))?;
        let _ = self.fps;
        Ok(())
    }
}

/// Convenience: write a full video in one call.
pub fn write_raw(
    path: &Path,
    width: u32,
    height: u32,
    fps: u32,
    frames: &[Vec<u8>],
) -> Result<(), IngestError> {
    let mut writer = RawWriter::create(path, width, height, fps)?;
    for f in frames {
        writer.write_frame(f)?;
    }
    writer.finish()
}

/// Sequential reader over a raw container.
pub struct RawStream {
    reader: BufReader<File>,
    path: std::path::PathBuf,
    width: usize,
    height: usize,
    fps: u32,
    frame_count: u32,
    cursor: u32,
}

impl RawStream {
    pub fn open(path: &Path) -> Result<Self, IngestError> {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let size = file.metadata().map_err(|e| io_err(path, e))?.len();
        let mut reader = BufReader::new(file);
        let mut header = [0u8; HEADER_LEN as usize];
        reader
            .read_exact(&mut header)
            .map_err(|_| IngestError::UnreadableSource(format!("{}: no header", path.display())))?;
        let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
        let (width, height, fps, frame_count) = (word(0), word(1), word(2), word(3));
        if width == 0 || height == 0 || fps == 0 {
            return Err(IngestError::Format(format!(
                "{}: bad header {width}x{height}@{fps}",
                path.display()
            )));
        }
        let expected = HEADER_LEN + u64::from(frame_count) * u64::from(width) * u64::from(height);
        if size != expected {
            return Err(IngestError::Format(format!(
                "{}: size {size} does not match header ({expected} expected)",
                path.display()
            )));
        }
        Ok(Self {
            reader,
            path: path.to_path_buf(),
            width: width as usize,
            height: height as usize,
            fps,
            frame_count,
            cursor: 0,
        })
    }

    pub fn frame_count(&self) -> u32 {
        self.frame_count
    }
}

impl FrameStream for RawStream {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn sample_rate_hz(&self) -> f64 {
        f64::from(self.fps)
    }

    fn next_frame(&mut self, buf: &mut Vec<u8>) -> Result<bool, IngestError> {
        if self.cursor >= self.frame_count {
            return Ok(false);
        }
        buf.resize(self.width * self.height, 0);
        self.reader
            .read_exact(buf)
            .map_err(|e| io_err(&self.path, e))?;
        self.cursor += 1;
        Ok(true)
    }
}
