//! Synthetic hive videos with scripted dancers and exact ground truth.
//!
//! Dancers are rendered as smooth bright ellipses on a dark comb
//! background. During waggle phases a sinusoidal lateral oscillation is
//! superposed on slow forward motion; return phases arc back to the start
//! of the next run on alternating sides, tracing the figure eight.
//! Distractors are walking, non-oscillating ellipses. Everything is
//! seeded, so the same scene file renders bit-identical videos.

mod colony;
mod render;
mod score;

pub use colony::{flip_fraction, synth_colony_records, ColonySpec};
pub use score::{score_detections, MatchRule, ScoreReport};

use chrono::{DateTime, Utc};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circular::{unit_vector, wrap360};
use crate::ingest::{FrameStream, IngestError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("dancer {dancer} leaves the frame at frame {frame} ({x:.1}, {y:.1})")]
    ScriptOutsideFrame {
        dancer: u32,
        frame: u64,
        x: f64,
        y: f64,
    },
}

/// One scripted dancer: a fixed number of waggle runs at a comb position,
/// separated by return phases.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DanceScript {
    pub dancer_id: u32,
    /// Comb position of the first waggle-run start, px.
    pub position: (f64, f64),
    pub body_length_px: f64,
    pub body_width_px: f64,
    /// Scripted waggle direction (0° = up, clockwise positive).
    pub direction_deg: f64,
    pub waggle_duration_ms: f64,
    pub waggle_freq_hz: f64,
    /// Amplitude of the lateral body oscillation.
    pub lateral_amplitude_px: f64,
    /// Forward speed during the waggle phase, px/frame.
    pub forward_speed_px: f64,
    pub runs: usize,
    pub return_duration_ms: f64,
    /// Per-run angular deviation SD (the divergence), degrees.
    pub divergence_sd_deg: f64,
    /// Alternate the sign of the divergence between consecutive runs.
    pub alternating_divergence: bool,
    /// Frame at which the first waggle run starts.
    pub start_frame: u64,
    pub seed: u64,
}

impl Default for DanceScript {
    fn default() -> Self {
        Self {
            dancer_id: 0,
            position: (160.0, 120.0),
            body_length_px: 21.0,
            body_width_px: 9.0,
            direction_deg: 0.0,
            waggle_duration_ms: 580.0,
            waggle_freq_hz: 13.0,
            lateral_amplitude_px: 7.5,
            forward_speed_px: 0.5,
            runs: 6,
            return_duration_ms: 1600.0,
            divergence_sd_deg: 14.0,
            alternating_divergence: false,
            start_frame: 0,
            seed: 1,
        }
    }
}

/// A full scene: frame geometry, sensor noise, distractors and dancers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub sample_rate_hz: f64,
    /// Total video length in frames; derived from the scripts when absent.
    pub frames: Option<u64>,
    /// Gaussian pixel noise SD, gray levels.
    pub noise_sd: f64,
    pub background: u8,
    pub distractors: usize,
    pub distractor_speed_px: f64,
    pub start_utc: DateTime<Utc>,
    pub seed: u64,
    pub dances: Vec<DanceScript>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            sample_rate_hz: 100.0,
            frames: None,
            noise_sd: 3.0,
            background: 40,
            distractors: 0,
            distractor_speed_px: 1.0,
            start_utc: "2016-08-10T10:00:00Z".parse().unwrap(),
            seed: 7,
            dances: Vec::new(),
        }
    }
}

/// Ground truth for one scripted waggle run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtRun {
    pub dancer_id: u32,
    pub run_index: usize,
    pub start_frame: u64,
    /// Inclusive.
    pub end_frame: u64,
    pub duration_ms: f64,
    /// Actual direction of this run (scripted + divergence).
    pub direction_deg: f64,
    /// Bee center per frame of the waggle phase.
    pub trace: Vec<(u64, f64, f64)>,
}

impl GtRun {
    pub fn mean_position(&self) -> (f64, f64) {
        let n = self.trace.len().max(1) as f64;
        (
            self.trace.iter().map(|t| t.1).sum::<f64>() / n,
            self.trace.iter().map(|t| t.2).sum::<f64>() / n,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GroundTruth {
    pub runs: Vec<GtRun>,
    /// Scripted mean direction per dancer id.
    pub scripted_directions: Vec<(u32, f64)>,
    pub body_length_px: f64,
}

/// Pose of one rendered ellipse in one frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EntityState {
    pub x: f64,
    pub y: f64,
    /// Body axis direction, degrees.
    pub dir_deg: f64,
}

pub(crate) struct EntityTrack {
    pub start_frame: u64,
    pub states: Vec<EntityState>,
    pub half_length: f64,
    pub half_width: f64,
    pub peak: f32,
}

impl EntityTrack {
    fn state_at(&self, frame: u64) -> Option<&EntityState> {
        if frame < self.start_frame {
            return None;
        }
        self.states.get((frame - self.start_frame) as usize)
    }
}

/// Quadratic Bezier between two points with a perpendicular bulge.
fn bezier_arc(from: (f64, f64), to: (f64, f64), bulge: f64, s: f64) -> (f64, f64) {
    let mid = ((from.0 + to.0) / 2.0, (from.1 + to.1) / 2.0);
    let d = (to.0 - from.0, to.1 - from.1);
    let len = (d.0 * d.0 + d.1 * d.1).sqrt().max(1e-9);
    let normal = (-d.1 / len, d.0 / len);
    let ctrl = (mid.0 + bulge * normal.0, mid.1 + bulge * normal.1);
    let u = 1.0 - s;
    (
        u * u * from.0 + 2.0 * u * s * ctrl.0 + s * s * to.0,
        u * u * from.1 + 2.0 * u * s * ctrl.1 + s * s * to.1,
    )
}

fn simulate_dancer(script: &DanceScript, s_r: f64) -> (EntityTrack, Vec<GtRun>) {
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let w_frames = ((script.waggle_duration_ms / 1000.0 * s_r).round() as u64).max(1);
    let r_frames = ((script.return_duration_ms / 1000.0 * s_r).round() as u64).max(1);
    let divergence = Normal::new(0.0, script.divergence_sd_deg.max(1e-9)).unwrap();
    let drift = Normal::new(0.0, 1.5).unwrap();

    let mut states = Vec::new();
    let mut gt_runs = Vec::new();
    let mut anchor = script.position;
    for i in 0..script.runs {
        let mut dev = divergence.sample(&mut rng);
        if script.alternating_divergence {
            dev = dev.abs() * if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let dir = wrap360(script.direction_deg + dev);
        let fwd = unit_vector(dir);
        let lat = unit_vector(dir + 90.0);
        let phase0: f64 = rng.random_range(0.0..std::f64::consts::TAU);

        let run_start = script.start_frame + states.len() as u64;
        let mut trace = Vec::with_capacity(w_frames as usize);
        for t in 0..w_frames {
            let along = script.forward_speed_px * t as f64;
            let osc = script.lateral_amplitude_px
                * (std::f64::consts::TAU * script.waggle_freq_hz * t as f64 / s_r + phase0).sin();
            let x = anchor.0 + fwd.0 * along + lat.0 * osc;
            let y = anchor.1 + fwd.1 * along + lat.1 * osc;
            states.push(EntityState { x, y, dir_deg: dir });
            trace.push((run_start + t, x, y));
        }
        gt_runs.push(GtRun {
            dancer_id: script.dancer_id,
            run_index: i,
            start_frame: run_start,
            end_frame: run_start + w_frames - 1,
            duration_ms: w_frames as f64 / s_r * 1000.0,
            direction_deg: dir,
            trace,
        });

        if i + 1 < script.runs {
            let end = states.last().map(|s| (s.x, s.y)).unwrap();
            let next = (
                script.position.0 + drift.sample(&mut rng),
                script.position.1 + drift.sample(&mut rng),
            );
            let bulge = script.body_length_px * if i % 2 == 0 { 1.2 } else { -1.2 };
            for t in 1..=r_frames {
                let s = t as f64 / r_frames as f64;
                let (x, y) = bezier_arc(end, next, bulge, s);
                // Body tangent to the return path.
                let (px, py) = bezier_arc(end, next, bulge, (s - 0.02).max(0.0));
                let dir_deg = crate::circular::vector_angle(x - px, y - py);
                states.push(EntityState { x, y, dir_deg });
            }
            anchor = next;
        }
    }
    let track = EntityTrack {
        start_frame: script.start_frame,
        states,
        half_length: script.body_length_px / 2.0,
        half_width: script.body_width_px / 2.0,
        peak: 140.0,
    };
    (track, gt_runs)
}

fn simulate_distractor(
    index: usize,
    spec: &SceneSpec,
    total_frames: u64,
    rng: &mut ChaCha8Rng,
) -> EntityTrack {
    let margin = 24.0;
    let mut x = rng.random_range(margin..spec.width as f64 - margin);
    let mut y = rng.random_range(margin..spec.height as f64 - margin);
    let mut dir: f64 = rng.random_range(0.0..360.0);
    let mut states = Vec::with_capacity(total_frames as usize);
    for _ in 0..total_frames {
        // Gentle random steering; reflect at walls.
        dir += rng.random_range(-2.0..2.0);
        let (dx, dy) = unit_vector(dir);
        x += dx * spec.distractor_speed_px;
        y += dy * spec.distractor_speed_px;
        if x < margin || x > spec.width as f64 - margin {
            dir = wrap360(-dir);
            x = x.clamp(margin, spec.width as f64 - margin);
        }
        if y < margin || y > spec.height as f64 - margin {
            dir = wrap360(180.0 - dir);
            y = y.clamp(margin, spec.height as f64 - margin);
        }
        states.push(EntityState { x, y, dir_deg: dir });
    }
    let _ = index;
    EntityTrack {
        start_frame: 0,
        states,
        half_length: 10.5,
        half_width: 4.5,
        peak: 120.0,
    }
}

/// A lazily rendered synthetic video.
pub struct SyntheticStream {
    width: usize,
    height: usize,
    sample_rate_hz: f64,
    total_frames: u64,
    background: u8,
    noise_sd: f64,
    seed: u64,
    tracks: Vec<EntityTrack>,
    cursor: u64,
}

impl SyntheticStream {
    pub fn frame_count(&self) -> u64 {
        self.total_frames
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    /// Render one frame by absolute index (pure; identical for equal inputs).
    pub fn render_frame(&self, index: u64) -> Vec<u8> {
        render::rasterize(
            self.width,
            self.height,
            self.background,
            self.noise_sd,
            self.seed,
            index,
            &self.tracks,
        )
    }
}

impl FrameStream for SyntheticStream {
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
        if self.cursor >= self.total_frames {
            return Ok(false);
        }
        *buf = self.render_frame(self.cursor);
        self.cursor += 1;
        Ok(true)
    }
}

/// Build the stream and ground truth for a scene.
pub fn render_video(spec: &SceneSpec) -> Result<(SyntheticStream, GroundTruth), SynthError> {
    if spec.width == 0 || spec.height == 0 {
        return Err(SynthError::InvalidSpec("zero frame size".into()));
    }
    for script in &spec.dances {
        if script.runs == 0 {
            return Err(SynthError::InvalidSpec(format!(
                "dancer {} has zero runs",
                script.dancer_id
            )));
        }
        if script.waggle_freq_hz <= 0.0 || script.waggle_freq_hz >= spec.sample_rate_hz / 2.0 {
            return Err(SynthError::InvalidSpec(format!(
                "dancer {} waggle frequency {} outside (0, Nyquist)",
                script.dancer_id, script.waggle_freq_hz
            )));
        }
    }

    let mut tracks = Vec::new();
    let mut runs = Vec::new();
    let mut scripted_directions = Vec::new();
    let mut body_length = 21.0;
    for script in &spec.dances {
        let (track, gt) = simulate_dancer(script, spec.sample_rate_hz);
        // Scripts must keep the dancer inside the frame.
        let margin = script.body_length_px;
        for (offset, s) in track.states.iter().enumerate() {
            if s.x < margin
                || s.y < margin
                || s.x > spec.width as f64 - margin
                || s.y > spec.height as f64 - margin
            {
                return Err(SynthError::ScriptOutsideFrame {
                    dancer: script.dancer_id,
                    frame: track.start_frame + offset as u64,
                    x: s.x,
                    y: s.y,
                });
            }
        }
        scripted_directions.push((script.dancer_id, script.direction_deg));
        body_length = script.body_length_px;
        runs.extend(gt);
        tracks.push(track);
    }

    let script_end = tracks
        .iter()
        .map(|t| t.start_frame + t.states.len() as u64)
        .max()
        .unwrap_or(0);
    let total_frames = spec.frames.unwrap_or(script_end + 50);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for i in 0..spec.distractors {
        tracks.push(simulate_distractor(i, spec, total_frames, &mut rng));
    }

    runs.sort_by_key(|r| (r.start_frame, r.dancer_id));
    Ok((
        SyntheticStream {
            width: spec.width,
            height: spec.height,
            sample_rate_hz: spec.sample_rate_hz,
            total_frames,
            background: spec.background,
            noise_sd: spec.noise_sd,
            seed: spec.seed,
            tracks,
            cursor: 0,
        },
        GroundTruth {
            runs,
            scripted_directions,
            body_length_px: body_length,
        },
    ))
}

/// Load a scene file (JSON).
pub fn load_scene(path: &std::path::Path) -> Result<SceneSpec, SynthError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SynthError::InvalidSpec(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| SynthError::InvalidSpec(format!("{}: {e}", path.display())))
}
