//! 2D FFT on small real images, backed by rustfft.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Forward 2D DFT of a row-major real image.
pub fn fft2(data: &[f64], width: usize, height: usize) -> Vec<Complex<f64>> {
    assert_eq!(data.len(), width * height);
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(width);
    let col_fft = planner.plan_fft_forward(height);

    let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    for row in buf.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = buf[y * width + x];
        }
        col_fft.process(&mut column);
        for y in 0..height {
            buf[y * width + x] = column[y];
        }
    }
    buf
}

/// Squared-magnitude spectrum with the DC bin moved to
/// `(width/2, height/2)`.
pub fn power_spectrum_centered(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let spec = fft2(data, width, height);
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        let sy = (y + height / 2) % height;
        for x in 0..width {
            let sx = (x + width / 2) % width;
            out[sy * width + sx] = spec[y * width + x].norm_sqr();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(N^4) reference DFT.
    fn naive_dft2(data: &[f64], width: usize, height: usize) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::default(); width * height];
        for ky in 0..height {
            for kx in 0..width {
                let mut acc = Complex::new(0.0, 0.0);
                for y in 0..height {
                    for x in 0..width {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * (kx as f64 * x as f64 / width as f64
                                + ky as f64 * y as f64 / height as f64);
                        acc += data[y * width + x] * Complex::new(phase.cos(), phase.sin());
                    }
                }
                out[ky * width + kx] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_on_random_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..20 {
            let data: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = fft2(&data, 8, 8);
            let slow = naive_dft2(&data, 8, 8);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dc_lands_in_the_center_after_shift() {
        let data = vec![1.0; 6 * 6];
        let ps = power_spectrum_centered(&data, 6, 6);
        let center = 3 * 6 + 3;
        assert!(ps[center] > 1.0);
        for (i, &v) in ps.iter().enumerate() {
            if i != center {
                assert!(v < 1e-18, "bin {i} = {v}");
            }
        }
    }
}
