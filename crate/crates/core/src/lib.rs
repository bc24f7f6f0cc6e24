//! Automatic detection and decoding of honey-bee waggle dances.
//!
//! The library is organized as a pipeline of independent stages:
//!
//! * [`ingest`] — frame streams (PGM sequences, raw containers, synthetic
//!   sources) and perspective rectification.
//! * [`attention`] — real-time detection of waggle-like activity through
//!   per-pixel frequency scoring, spatial clustering and temporal assembly
//!   of waggle-run candidates.
//! * [`filternet`] — a small 3D convolutional network, trained from scratch,
//!   that rejects false detections based on the exported image snippets.
//! * [`orientation`] — decoding of the dancer's body axis and direction from
//!   accumulated Fourier spectra of difference images.
//! * [`mapping`] — grouping runs into dances, robust angular averaging and
//!   translation to field coordinates.
//! * [`synth`] — a synthetic dance-video generator with exact ground truth,
//!   used for calibration and verification.
//!
//! Stages communicate through JSON-lines run records and snippet stack files
//! (see [`records`]), so each stage can be re-run in isolation.
//!
//! Angle convention used throughout the crate: 0° points up (against
//! gravity on the comb, towards decreasing image row), angles grow
//! clockwise, and directions are reported in `[0, 360)` degrees.

pub mod attention;
pub mod circular;
pub mod config;
pub mod filternet;
pub mod hac;
pub mod ingest;
pub mod mapping;
pub mod orientation;
pub mod pipeline;
pub mod records;
pub mod synth;
