//! Four-point homography estimation and perspective rectification.

use super::IngestError;

/// A 3×3 projective transform, normalized so the bottom-right element is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn from_matrix(mut m: [[f64; 3]; 3]) -> Result<Self, IngestError> {
        let w = m[2][2];
        if w == 0.0 {
            return Err(IngestError::Degenerate("h33 is zero".into()));
        }
        for row in &mut m {
            for v in row {
                *v /= w;
            }
        }
        let h = Self { m };
        if h.det().abs() < 1e-12 {
            return Err(IngestError::Degenerate("matrix is singular".into()));
        }
        Ok(h)
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Apply the transform to a point.
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.m;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        (
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        )
    }

    /// Inverse transform (adjugate over determinant, renormalized).
    pub fn inverse(&self) -> Result<Homography, IngestError> {
        let m = &self.m;
        let det = self.det();
        if det.abs() < 1e-12 {
            return Err(IngestError::Degenerate("matrix is singular".into()));
        }
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                inv[r][c] = adj[r][c] / det;
            }
        }
        Homography::from_matrix(inv)
    }
}

fn collinear(points: &[(f64, f64); 4]) -> bool {
    // Scale-relative tolerance on the triangle area.
    let span = points
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(1.0_f64, f64::max);
    let eps = 1e-9 * span * span;
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                let (ax, ay) = points[i];
                let (bx, by) = points[j];
                let (cx, cy) = points[k];
                let cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
                if cross.abs() <= eps {
                    return true;
                }
            }
        }
    }
    false
}

/// Solve a dense linear system with Gaussian elimination and partial
/// pivoting. `a` is row-major `n x n`, consumed along with `b`.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in (row + 1)..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Direct linear solution of the 4-point homography: `src[i]` maps exactly
/// to `dst[i]`.
pub fn estimate_homography(
    src: &[(f64, f64); 4],
    dst: &[(f64, f64); 4],
) -> Result<Homography, IngestError> {
    if collinear(src) {
        return Err(IngestError::Degenerate(
            "three source points are collinear".into(),
        ));
    }
    if collinear(dst) {
        return Err(IngestError::Degenerate(
            "three destination points are collinear".into(),
        ));
    }
    // Unknowns h = [h11 h12 h13 h21 h22 h23 h31 h32], with h33 = 1:
    //   u = (h11 x + h12 y + h13) / (h31 x + h32 y + 1)
    //   v = (h21 x + h22 y + h23) / (h31 x + h32 y + 1)
    let mut a = Vec::with_capacity(8);
    let mut b = Vec::with_capacity(8);
    for i in 0..4 {
        let (x, y) = src[i];
        let (u, v) = dst[i];
        a.push(vec![x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
        b.push(u);
        a.push(vec![0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
        b.push(v);
    }
    let h = solve_linear(a, b)
        .ok_or_else(|| IngestError::Degenerate("homography system is singular".into()))?;
    Homography::from_matrix([
        [h[0], h[1], h[2]],
        [h[3], h[4], h[5]],
        [h[6], h[7], 1.0],
    ])
}

/// Bilinear sample of `frame` at real coordinates, zero outside the image.
fn sample_bilinear(frame: &[u8], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let mut acc = 0.0;
    for (dy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
        for (dx, wx) in [(0i64, 1.0 - fx), (1, fx)] {
            let sx = x0 as i64 + dx;
            let sy = y0 as i64 + dy;
            if sx < 0 || sy < 0 || sx >= width as i64 || sy >= height as i64 {
                continue;
            }
            acc += wx * wy * f64::from(frame[sy as usize * width + sx as usize]);
        }
    }
    acc
}

/// Rectify a frame: each output pixel is sampled from the input via the
/// inverse homography with bilinear interpolation; out-of-bounds samples
/// are 0.
pub fn rectify(
    frame: &[u8],
    width: usize,
    height: usize,
    h: &Homography,
) -> Result<Vec<u8>, IngestError> {
    let inv = h.inverse()?;
    let mut out = vec![0u8; width * height];
    for y in 0..height {
        for x in 0..width {
            let (sx, sy) = inv.apply(x as f64, y as f64);
            let v = sample_bilinear(frame, width, height, sx, sy);
            out[y * width + x] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const UNIT_SQUARE: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

    #[test]
    fn identity_from_equal_corners() {
        let h = estimate_homography(&UNIT_SQUARE, &UNIT_SQUARE).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((h.matrix()[r][c] - want).abs() < 1e-9, "{r},{c}");
            }
        }
    }

    #[test]
    fn pure_translation() {
        let shifted: [(f64, f64); 4] = UNIT_SQUARE.map(|(x, y)| (x + 5.0, y));
        let h = estimate_homography(&UNIT_SQUARE, &shifted).unwrap();
        assert!((h.matrix()[0][2] - 5.0).abs() < 1e-9);
        assert!((h.matrix()[1][2] - 0.0).abs() < 1e-9);
        let (u, v) = h.apply(0.3, 0.7);
        assert!((u - 5.3).abs() < 1e-9 && (v - 0.7).abs() < 1e-9);
    }

    #[test]
    fn corners_map_within_half_pixel() {
        let src = [(10.0, 20.0), (300.0, 15.0), (310.0, 230.0), (5.0, 225.0)];
        let dst = [(0.0, 0.0), (319.0, 0.0), (319.0, 239.0), (0.0, 239.0)];
        let h = estimate_homography(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            let (u, v) = h.apply(s.0, s.1);
            assert!(((u - d.0).powi(2) + (v - d.1).powi(2)).sqrt() < 0.5);
        }
    }

    #[test]
    fn trapezoid_matches_generic_linear_solver_oracle() {
        // Independent route: assemble the same 8x8 system and solve it with
        // nalgebra's general LU solver.
        let src = [(40.0, 10.0), (280.0, 30.0), (250.0, 220.0), (20.0, 200.0)];
        let dst = [(0.0, 0.0), (319.0, 0.0), (319.0, 239.0), (0.0, 239.0)];
        let h = estimate_homography(&src, &dst).unwrap();

        let mut a = nalgebra::DMatrix::<f64>::zeros(8, 8);
        let mut b = nalgebra::DVector::<f64>::zeros(8);
        for i in 0..4 {
            let (x, y) = src[i];
            let (u, v) = dst[i];
            for (c, val) in [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y].iter().enumerate() {
                a[(2 * i, c)] = *val;
            }
            b[2 * i] = u;
            for (c, val) in [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y].iter().enumerate() {
                a[(2 * i + 1, c)] = *val;
            }
            b[2 * i + 1] = v;
        }
        let sol = a.lu().solve(&b).expect("oracle solve");
        let flat = [
            sol[0], sol[1], sol[2], sol[3], sol[4], sol[5], sol[6], sol[7], 1.0,
        ];
        for r in 0..3 {
            for c in 0..3 {
                assert!(
                    (h.matrix()[r][c] - flat[3 * r + c]).abs() < 1e-8,
                    "element {r},{c}: {} vs {}",
                    h.matrix()[r][c],
                    flat[3 * r + c]
                );
            }
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let src = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 5.0)];
        assert!(matches!(
            estimate_homography(&src, &UNIT_SQUARE),
            Err(IngestError::Degenerate(_))
        ));
    }

    #[test]
    fn forward_and_backward_estimates_compose_to_identity() {
        let p = [(12.0, 9.0), (200.0, 25.0), (190.0, 180.0), (8.0, 170.0)];
        let q = [(0.0, 0.0), (160.0, 0.0), (160.0, 120.0), (0.0, 120.0)];
        let fwd = estimate_homography(&p, &q).unwrap();
        let bwd = estimate_homography(&q, &p).unwrap();
        // Compose and renormalize.
        let mut composed = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                for k in 0..3 {
                    composed[r][c] += bwd.matrix()[r][k] * fwd.matrix()[k][c];
                }
            }
        }
        let w = composed[2][2];
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((composed[r][c] / w - want).abs() < 1e-6, "{r},{c}");
            }
        }
    }

    #[test]
    fn rectify_identity_is_bitwise_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let (w, h) = (33, 21);
        let frame: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..=255u8)).collect();
        let out = rectify(&frame, w, h, &Homography::identity()).unwrap();
        assert_eq!(out, frame);
    }

    #[test]
    fn rectify_integer_translation_shifts_with_zero_border() {
        let (w, h) = (16, 12);
        let mut frame = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                frame[y * w + x] = (10 + x * 3 + y * 5) as u8;
            }
        }
        // Maps source (x, y) to destination (x + 3, y): output pixel (x, y)
        // samples source (x - 3, y).
        let t = Homography::from_matrix([[1.0, 0.0, 3.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            .unwrap();
        let out = rectify(&frame, w, h, &t).unwrap();
        for y in 0..h {
            for x in 0..w {
                let want = if x < 3 { 0 } else { frame[y * w + x - 3] };
                assert_eq!(out[y * w + x], want, "({x},{y})");
            }
        }
    }

    #[test]
    fn rectify_matches_naive_per_pixel_oracle() {
        // Checkerboard under a trapezoid-to-rectangle warp, verified against
        // an independent per-pixel inverse-map + bilinear oracle.
        let (w, h) = (64, 48);
        let mut frame = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                frame[y * w + x] = if (x / 8 + y / 8) % 2 == 0 { 230 } else { 25 };
            }
        }
        let src = [(6.0, 4.0), (58.0, 8.0), (52.0, 44.0), (2.0, 40.0)];
        let dst = [(0.0, 0.0), (63.0, 0.0), (63.0, 47.0), (0.0, 47.0)];
        let hom = estimate_homography(&src, &dst).unwrap();
        let out = rectify(&frame, w, h, &hom).unwrap();

        let inv = hom.inverse().unwrap();
        for y in 0..h {
            for x in 0..w {
                let m = inv.matrix();
                let dw = m[2][0] * x as f64 + m[2][1] * y as f64 + m[2][2];
                let sx = (m[0][0] * x as f64 + m[0][1] * y as f64 + m[0][2]) / dw;
                let sy = (m[1][0] * x as f64 + m[1][1] * y as f64 + m[1][2]) / dw;
                let (x0, y0) = (sx.floor() as i64, sy.floor() as i64);
                let (fx, fy) = (sx - sx.floor(), sy - sy.floor());
                let mut acc = 0.0;
                for (dy, wy) in [(0, (1.0 - fy)), (1, fy)] {
                    for (dx, wx) in [(0, (1.0 - fx)), (1, fx)] {
                        let (px, py) = (x0 + dx, y0 + dy);
                        if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                            acc += wx * wy * f64::from(frame[py as usize * w + px as usize]);
                        }
                    }
                }
                let want = acc.round().clamp(0.0, 255.0) as u8;
                assert_eq!(out[y * w + x], want, "({x},{y})");
            }
        }
    }
}
