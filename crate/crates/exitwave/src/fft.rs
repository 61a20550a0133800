//! 2D discrete Fourier transforms with the unitary convention.
//!
//! Forward kernel is exp(-2 pi i q.r) with 1/sqrt(N) scaling on both
//! directions so Parseval holds exactly: sum |psi|^2 == sum |FT(psi)|^2.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward unitary 2D FFT.
pub fn fft2(input: &Array2<Complex64>) -> Array2<Complex64> {
    transform(input, rustfft::FftDirection::Forward)
}

/// Inverse unitary 2D FFT.
pub fn ifft2(input: &Array2<Complex64>) -> Array2<Complex64> {
    transform(input, rustfft::FftDirection::Inverse)
}

fn transform(input: &Array2<Complex64>, dir: rustfft::FftDirection) -> Array2<Complex64> {
    let (ny, nx) = input.dim();
    let mut planner = FftPlanner::new();
    let fft_row = planner.plan_fft(nx, dir);
    let fft_col = planner.plan_fft(ny, dir);

    let mut out = input.clone();
    // rows (contiguous)
    for mut row in out.rows_mut() {
        let slice = row.as_slice_mut().expect("row-major layout");
        fft_row.process(slice);
    }
    // columns via scratch buffer
    let mut col_buf = vec![Complex64::default(); ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col_buf[iy] = out[[iy, ix]];
        }
        fft_col.process(&mut col_buf);
        for iy in 0..ny {
            out[[iy, ix]] = col_buf[iy];
        }
    }
    let scale = 1.0 / ((nx * ny) as f64).sqrt();
    out.mapv_inplace(|v| v * scale);
    out
}

/// FFT bin frequencies for n samples with pitch `pixel`, cycles per unit,
/// in the standard layout (0, 1, .., n/2-1, -n/2, .., -1) / (n * pixel).
pub fn fft_freqs(n: usize, pixel: f64) -> Vec<f64> {
    let dq = 1.0 / (n as f64 * pixel);
    (0..n)
        .map(|i| {
            let k = if i <= n / 2 - 1 { i as f64 } else { i as f64 - n as f64 };
            k * dq
        })
        .collect()
}

/// Zero all spectral bins with |q| > fraction * nyquist, operating in place
/// on a spectrum already in FFT layout.
pub fn band_limit_spectrum(
    spectrum: &mut Array2<Complex64>,
    pixel: f64,
    fraction: f64,
) {
    let (ny, nx) = spectrum.dim();
    let qx = fft_freqs(nx, pixel);
    let qy = fft_freqs(ny, pixel);
    let q_max = fraction * 0.5 / pixel;
    let q_max2 = q_max * q_max;
    for iy in 0..ny {
        for ix in 0..nx {
            if qx[ix] * qx[ix] + qy[iy] * qy[iy] > q_max2 {
                spectrum[[iy, ix]] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Band limit a real-space field: FFT, zero out-of-band bins, inverse FFT.
pub fn band_limit_field(
    values: &Array2<Complex64>,
    pixel: f64,
    fraction: f64,
) -> Array2<Complex64> {
    let mut spec = fft2(values);
    band_limit_spectrum(&mut spec, pixel, fraction);
    ifft2(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;

    #[test]
    fn parseval_holds() {
        let n = 32;
        let field = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new((i as f64 * 0.3).sin(), (j as f64 * 0.7).cos())
        });
        let spec = fft2(&field);
        let e_r: f64 = field.iter().map(|v| v.norm_sqr()).sum();
        let e_q: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(e_r, e_q, max_relative = 1e-12);
    }

    #[test]
    fn round_trip_is_identity() {
        let n = 16;
        let field = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new(i as f64, j as f64)
        });
        let back = ifft2(&fft2(&field));
        for (a, b) in field.iter().zip(back.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_transforms_to_delta() {
        let n = 8;
        let field = Array2::from_elem((n, n), Complex64::new(1.0, 0.0));
        let spec = fft2(&field);
        assert_relative_eq!(spec[[0, 0]].re, n as f64, max_relative = 1e-12);
        for (idx, v) in spec.indexed_iter() {
            if idx != (0, 0) {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn band_limit_is_idempotent() {
        let n = 32;
        let field = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new((i * 7 + j * 3) as f64 % 5.0, (i * j) as f64 % 3.0)
        });
        let once = band_limit_field(&field, 0.1, 2.0 / 3.0);
        let twice = band_limit_field(&once, 0.1, 2.0 / 3.0);
        for (a, b) in once.iter().zip(twice.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn fft_freqs_layout() {
        let f = fft_freqs(8, 0.5);
        assert_eq!(f.len(), 8);
        assert_relative_eq!(f[0], 0.0);
        assert_relative_eq!(f[1], 0.25);
        assert_relative_eq!(f[4], -1.0);
        assert_relative_eq!(f[7], -0.25);
    }
}
