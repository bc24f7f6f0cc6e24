//! Binary PGM (P5) reading and writing, 8-bit grayscale only.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{io_err, IngestError};

/// Read a binary PGM file. Returns `(width, height, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>), IngestError> {
    let bad = |reason: String| IngestError::Format(format!("{}: {reason}", path.display()));
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;

    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String, IngestError> {
        // Skip whitespace and '#' comment lines.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(IngestError::Format("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token(&bytes)? != "P5" {
        return Err(bad("not a binary PGM (P5)".into()));
    }
    let width: usize = token(&bytes)?.parse().map_err(|_| bad("bad width".into()))?;
    let height: usize = token(&bytes)?.parse().map_err(|_| bad("bad height".into()))?;
    let maxval: usize = token(&bytes)?.parse().map_err(|_| bad("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(bad(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let expected = width * height;
    if bytes.len() < pos + expected {
        return Err(bad(format!(
            "raster has {} bytes, expected {expected}",
            bytes.len().saturating_sub(pos)
        )));
    }
    Ok((width, height, bytes[pos..pos + expected].to_vec()))
}

/// Write a binary PGM file with maxval 255.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<(), IngestError> {
    assert_eq!(pixels.len(), width * height, "pgm pixel count");
    let mut out = BufWriter::new(std::fs::File::create(path).map_err(|e| io_err(path, e))?);
    write!(out, "P5\n{width} {height}\n255\n").map_err(|e| io_err(path, e))?;
    out.write_all(pixels).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let pixels: Vec<u8> = (0..12 * 7).map(|i| (i * 3 % 256) as u8).collect();
        write_pgm(&path, 12, 7, &pixels).unwrap();
        let (w, h, back) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (12, 7));
        assert_eq!(back, pixels);
    }

    #[test]
    fn comments_in_header_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        std::fs::write(&path, b"P5\n# a comment\n2 2\n255\n\x01\x02\x03\x04").unwrap();
        let (w, h, data) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(data, vec![1, 2, 3, 4]);
    }

    #[test]
    fn truncated_raster_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\n\x01\x02").unwrap();
        assert!(matches!(read_pgm(&path), Err(IngestError::Format(_))));
    }
}
