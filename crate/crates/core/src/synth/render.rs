//! Rasterization of entity tracks into 8-bit frames.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EntityTrack;
use crate::circular::unit_vector;

/// Render one frame: background, ellipse blobs, seeded Gaussian noise.
///
/// Each blob has a Gaussian elliptical brightness profile so that subpixel
/// motion produces smooth intensity modulation — the signal the dot
/// detectors key on.
pub(crate) fn rasterize(
    width: usize,
    height: usize,
    background: u8,
    noise_sd: f64,
    seed: u64,
    frame_index: u64,
    tracks: &[EntityTrack],
) -> Vec<u8> {
    let mut acc = vec![f32::from(background); width * height];

    for track in tracks {
        let Some(state) = track.state_at(frame_index) else {
            continue;
        };
        let (ux, uy) = unit_vector(state.dir_deg);
        let (vx, vy) = unit_vector(state.dir_deg + 90.0);
        let (a, b) = (track.half_length, track.half_width);
        let reach = (2.2 * a).ceil() as i64;
        let cx = state.x;
        let cy = state.y;
        let x_lo = ((cx as i64) - reach).max(0);
        let x_hi = ((cx as i64) + reach).min(width as i64 - 1);
        let y_lo = ((cy as i64) - reach).max(0);
        let y_hi = ((cy as i64) + reach).min(height as i64 - 1);
        for py in y_lo..=y_hi {
            for px in x_lo..=x_hi {
                let dx = px as f64 - cx;
                let dy = py as f64 - cy;
                let du = (dx * ux + dy * uy) / a;
                let dv = (dx * vx + dy * vy) / b;
                let rho2 = du * du + dv * dv;
                if rho2 < 6.0 {
                    acc[py as usize * width + px as usize] +=
                        track.peak * (-rho2).exp() as f32;
                }
            }
        }
    }

    // Per-frame noise stream, independent of the entity set.
    if noise_sd > 0.0 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ frame_index.wrapping_mul(0xD129_0D3E_A8C5_1F6B));
        let sd = noise_sd as f32;
        for v in &mut acc {
            let z: f32 = StandardNormal.sample(&mut rng);
            *v += sd * z;
        }
    }

    acc.into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect()
}
