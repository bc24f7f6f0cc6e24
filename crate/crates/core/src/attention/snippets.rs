//! Square snippet crops around trace centroids, zero-padded at the borders.

/// Crop a `size`×`size` region of `frame` centered on `(cx, cy)`.
///
/// The centroid is rounded to the nearest pixel, which then lands at
/// snippet position `(size/2, size/2)`. Samples outside the frame are 0.
pub fn crop_snippet(
    frame: &[u8],
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    size: usize,
) -> Vec<u8> {
    let half = (size / 2) as i64;
    let left = cx.round() as i64 - half;
    let top = cy.round() as i64 - half;
    let mut out = vec![0u8; size * size];
    for row in 0..size as i64 {
        let sy = top + row;
        if sy < 0 || sy >= height as i64 {
            continue;
        }
        for col in 0..size as i64 {
            let sx = left + col;
            if sx < 0 || sx >= width as i64 {
                continue;
            }
            out[(row * size as i64 + col) as usize] = frame[sy as usize * width + sx as usize];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Oracle: sample every snippet pixel independently with bounds checks.
    fn naive_crop(
        frame: &[u8],
        width: usize,
        height: usize,
        cx: f64,
        cy: f64,
        size: usize,
    ) -> Vec<u8> {
        let mut out = vec![0u8; size * size];
        for r in 0..size {
            for c in 0..size {
                let sx = cx.round() as i64 - (size / 2) as i64 + c as i64;
                let sy = cy.round() as i64 - (size / 2) as i64 + r as i64;
                if sx >= 0 && sy >= 0 && (sx as usize) < width && (sy as usize) < height {
                    out[r * size + c] = frame[sy as usize * width + sx as usize];
                }
            }
        }
        out
    }

    fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..=255u8)).collect()
    }

    #[test]
    fn interior_crop_is_the_exact_subregion() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (w, h) = (100, 80);
        let frame = random_frame(&mut rng, w * h);
        let snip = crop_snippet(&frame, w, h, 50.0, 40.0, 50);
        for r in 0..50 {
            for c in 0..50 {
                assert_eq!(snip[r * 50 + c], frame[(40 - 25 + r) * w + (50 - 25 + c)]);
            }
        }
    }

    #[test]
    fn corner_crop_is_zero_padded() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (w, h) = (60, 60);
        let frame = random_frame(&mut rng, w * h);
        let snip = crop_snippet(&frame, w, h, 0.0, 0.0, 50);
        // Top-left quadrant of the snippet lies outside the frame.
        for r in 0..25 {
            for c in 0..50 {
                if r < 25 && c < 25 {
                    assert_eq!(snip[r * 50 + c], 0);
                }
            }
        }
        assert_eq!(snip[25 * 50 + 25], frame[0]);
    }

    #[test]
    fn matches_naive_oracle_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (w, h) = (64, 48);
        let frame = random_frame(&mut rng, w * h);
        for _ in 0..200 {
            let cx = rng.random_range(-30.0..90.0);
            let cy = rng.random_range(-30.0..80.0);
            let size = *[7usize, 20, 50].iter().nth(rng.random_range(0..3)).unwrap();
            assert_eq!(
                crop_snippet(&frame, w, h, cx, cy, size),
                naive_crop(&frame, w, h, cx, cy, size),
                "cx={cx} cy={cy} size={size}"
            );
        }
    }
}
