//! Off-axis hologram synthesis and sideband inversion, plus focal-series
//! generation and iterative modulus-projection reconstruction.

use crate::fft::{fft2, fft_freqs, ifft2};
use crate::grid::{ComplexField2D, GridError, GridSpec};
use crate::optics::{apply_ctf, CtfParams, OpticsError};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HolographyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error("carrier frequency ({0}, {1}) 1/nm does not sit on a reciprocal-lattice bin")]
    CarrierOffLattice(f64, f64),
    #[error("carrier frequency magnitude {q_mag} 1/nm is outside the band limit {limit} 1/nm")]
    CarrierOutsideBand { q_mag: f64, limit: f64 },
    #[error("crop radius {crop_radius} 1/nm reaches the centerband (|q_c| = {q_mag} 1/nm)")]
    SidebandOverlap { crop_radius: f64, q_mag: f64 },
    #[error("defocus series needs at least 2 points, got {0}")]
    BadCount(usize),
    #[error("focal series has no images")]
    EmptySeries,
    #[error("focal series has {images} images but {defoci} defoci")]
    LengthMismatch { images: usize, defoci: usize },
}

/// Off-axis hologram synthesis parameters.
///
/// The combined fringe contrast is mu = |mu_coh| |mu_inel| |mu_inst| * mtf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HologramParams {
    /// Carrier frequency of the tilted reference wave, 1/nm. Must land on
    /// an integer reciprocal bin of the target grid.
    pub q_c: [f64; 2],
    pub mu_coh: f64,
    pub mu_inel: f64,
    pub mu_inst: f64,
    pub mtf: f64,
}

impl HologramParams {
    pub fn with_unit_contrast(q_c: [f64; 2]) -> Self {
        Self {
            q_c,
            mu_coh: 1.0,
            mu_inel: 1.0,
            mu_inst: 1.0,
            mtf: 1.0,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu_coh.abs() * self.mu_inel.abs() * self.mu_inst.abs() * self.mtf
    }

    /// Carrier bin indices on `grid`, or an error if off-lattice or
    /// outside the band limit.
    pub fn carrier_bins(
        &self,
        grid: GridSpec,
        band_limit_fraction: f64,
    ) -> Result<[i64; 2], HolographyError> {
        let fx = self.q_c[0] / grid.dqx();
        let fy = self.q_c[1] / grid.dqy();
        let (jx, jy) = (fx.round(), fy.round());
        if (fx - jx).abs() > 1e-9 || (fy - jy).abs() > 1e-9 {
            return Err(HolographyError::CarrierOffLattice(self.q_c[0], self.q_c[1]));
        }
        let q_mag = (self.q_c[0] * self.q_c[0] + self.q_c[1] * self.q_c[1]).sqrt();
        let limit = band_limit_fraction * grid.nyquist();
        if q_mag <= 0.0 || q_mag > limit {
            return Err(HolographyError::CarrierOutsideBand { q_mag, limit });
        }
        Ok([jx as i64, jy as i64])
    }
}

/// I_hol(r) = 1 + |psi|^2 + 2 mu Re(psi(r) exp(2 pi i q_c . r)).
pub fn synthesize_hologram(
    psi_exit: &ComplexField2D,
    params: &HologramParams,
) -> Result<Array2<f64>, HolographyError> {
    let grid = psi_exit.grid;
    params.carrier_bins(grid, crate::grid::DEFAULT_BAND_LIMIT_FRACTION)?;
    let mu = params.mu();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = Array2::zeros((grid.ny, grid.nx));
    for iy in 0..grid.ny {
        let y = iy as f64 * grid.pixel_nm;
        for ix in 0..grid.nx {
            let x = ix as f64 * grid.pixel_nm;
            let psi = psi_exit.values[[iy, ix]];
            let fringe = Complex64::from_polar(1.0, two_pi * (params.q_c[0] * x + params.q_c[1] * y));
            out[[iy, ix]] = 1.0 + psi.norm_sqr() + 2.0 * mu * (psi * fringe).re;
        }
    }
    Ok(out)
}

/// Recover the exit wave from one sideband: FT -> circular crop about
/// +q_c -> shift to origin -> IFT -> divide by mu. A `crop_radius` of
/// `None` uses the default |q_c|/3.
pub fn reconstruct_sideband(
    hologram: &Array2<f64>,
    grid: GridSpec,
    q_c: [f64; 2],
    crop_radius: Option<f64>,
    mu: f64,
) -> Result<ComplexField2D, HolographyError> {
    let q_mag = (q_c[0] * q_c[0] + q_c[1] * q_c[1]).sqrt();
    let crop = crop_radius.unwrap_or(q_mag / 3.0);
    if crop >= q_mag {
        return Err(HolographyError::SidebandOverlap {
            crop_radius: crop,
            q_mag,
        });
    }
    let params = HologramParams::with_unit_contrast(q_c);
    let [jx, jy] = params.carrier_bins(grid, 1.0)?;

    let complex = hologram.map(|&v| Complex64::new(v, 0.0));
    let spectrum = fft2(&complex);
    let (nx, ny) = (grid.nx as i64, grid.ny as i64);
    let qx = fft_freqs(grid.nx, grid.pixel_nm);
    let qy = fft_freqs(grid.ny, grid.pixel_nm);
    // shift the sideband to the origin and keep only bins within the crop
    let mut shifted = Array2::from_elem((grid.ny, grid.nx), Complex64::new(0.0, 0.0));
    let crop2 = crop * crop;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let q2 = qx[ix] * qx[ix] + qy[iy] * qy[iy];
            if q2 > crop2 {
                continue;
            }
            let sx = (ix as i64 + jx).rem_euclid(nx) as usize;
            let sy = (iy as i64 + jy).rem_euclid(ny) as usize;
            shifted[[iy, ix]] = spectrum[[sy, sx]];
        }
    }
    let scale = 1.0 / mu;
    let values = ifft2(&shifted).map(|v| v * scale);
    Ok(ComplexField2D::new(values, grid)?)
}

/// defoci[i] = df_min + (df_max - df_min) * (i / (count - 1))^2.
pub fn quadratic_defocus_series(
    df_min_nm: f64,
    df_max_nm: f64,
    count: usize,
) -> Result<Vec<f64>, HolographyError> {
    if count < 2 {
        return Err(HolographyError::BadCount(count));
    }
    let span = df_max_nm - df_min_nm;
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            df_min_nm + span * t * t
        })
        .collect())
}

/// A defocus series of intensity images sharing one CTF.
#[derive(Debug, Clone)]
pub struct FocalSeries {
    pub images: Vec<Array2<f64>>,
    pub defoci_nm: Vec<f64>,
    pub ctf_base: CtfParams,
    pub grid: GridSpec,
}

impl FocalSeries {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    fn validate(&self) -> Result<(), HolographyError> {
        if self.images.is_empty() {
            return Err(HolographyError::EmptySeries);
        }
        if self.images.len() != self.defoci_nm.len() {
            return Err(HolographyError::LengthMismatch {
                images: self.images.len(),
                defoci: self.defoci_nm.len(),
            });
        }
        Ok(())
    }
}

/// Image each defocus plane: set C_{1,0,a} = df in the base CTF, apply
/// it, and record |psi_img|^2 per pixel.
pub fn generate_focal_series(
    psi_exit: &ComplexField2D,
    ctf_base: &CtfParams,
    defoci_nm: &[f64],
) -> Result<FocalSeries, HolographyError> {
    let images = defoci_nm
        .par_iter()
        .map(|&df| {
            let ctf = ctf_base.clone().with_defocus(df);
            let img = apply_ctf(psi_exit, &ctf)?;
            Ok(img.values.map(|v| v.norm_sqr()))
        })
        .collect::<Result<Vec<_>, HolographyError>>()?;
    Ok(FocalSeries {
        images,
        defoci_nm: defoci_nm.to_vec(),
        ctf_base: ctf_base.clone(),
        grid: psi_exit.grid,
    })
}

/// Outcome of [`reconstruct_focal_series`]: the recovered wave plus the
/// per-sweep data-consistency residuals that were monitored.
#[derive(Debug, Clone)]
pub struct FocalReconstruction {
    pub wave: ComplexField2D,
    /// sum_j || |CTF_j psi_hat| - sqrt(I_j) ||^2, one entry per sweep.
    pub residuals: Vec<f64>,
    pub sweeps_run: usize,
}

/// Averaged modulus-projection reconstruction.
///
/// Start from sqrt(I_0) with zero phase. Each sweep forward-applies every
/// plane's CTF, replaces the modulus with the measured sqrt(I_j), and
/// back-applies the conjugate aberration phase; the new estimate is the
/// mean of the back-propagated fields. Stops early once the residual's
/// relative change drops below 1e-8.
pub fn reconstruct_focal_series(
    series: &FocalSeries,
    iterations: usize,
) -> Result<FocalReconstruction, HolographyError> {
    series.validate()?;
    let grid = series.grid;
    let moduli: Vec<Array2<f64>> = series.images.iter().map(|i| i.map(|v| v.max(0.0).sqrt())).collect();

    if series.len() == 1 {
        // no constraint diversity: the answer is the measured modulus
        let values = moduli[0].map(|&m| Complex64::new(m, 0.0));
        let wave = ComplexField2D::new(values, grid)?;
        return Ok(FocalReconstruction {
            wave,
            residuals: vec![0.0],
            sweeps_run: 0,
        });
    }

    // per-plane forward kernels (envelope * exp(-i chi)) and the
    // phase-conjugate backward kernels
    let kernels: Vec<(Array2<Complex64>, Array2<Complex64>)> = series
        .defoci_nm
        .par_iter()
        .map(|&df| {
            let ctf = series.ctf_base.clone().with_defocus(df);
            plane_kernels(grid, &ctf)
        })
        .collect();

    let mut psi_hat = moduli[0].map(|&m| Complex64::new(m, 0.0));
    let mut residuals = Vec::with_capacity(iterations);
    let mut sweeps_run = 0;
    for _ in 0..iterations {
        let spectrum = fft2(&psi_hat);
        let per_plane: Vec<(Array2<Complex64>, f64)> = kernels
            .par_iter()
            .zip(moduli.par_iter())
            .map(|((forward, backward), modulus)| {
                let mut plane_spec = spectrum.clone();
                plane_spec.zip_mut_with(forward, |s, k| *s *= k);
                let plane = ifft2(&plane_spec);
                let mut residual = 0.0;
                let projected = ndarray::Zip::from(&plane).and(modulus).map_collect(|&p, &m| {
                    let r = p.norm();
                    residual += (r - m) * (r - m);
                    if r > 1e-300 {
                        p * (m / r)
                    } else {
                        Complex64::new(m, 0.0)
                    }
                });
                let mut back_spec = fft2(&projected);
                back_spec.zip_mut_with(backward, |s, k| *s *= k);
                (ifft2(&back_spec), residual)
            })
            .collect();

        let mut residual = 0.0;
        let mut accum = Array2::from_elem((grid.ny, grid.nx), Complex64::new(0.0, 0.0));
        for (plane, r) in &per_plane {
            residual += *r;
            accum.zip_mut_with(plane, |a, p| *a += p);
        }
        let inv_n = 1.0 / series.len() as f64;
        accum.mapv_inplace(|v| v * inv_n);
        psi_hat = accum;
        sweeps_run += 1;

        let converged = residuals
            .last()
            .map(|&prev: &f64| (prev - residual).abs() <= 1e-8 * prev.max(1e-300))
            .unwrap_or(false);
        residuals.push(residual);
        if converged {
            break;
        }
    }

    // fix the global phase: spatial mean real and non-negative
    let mean: Complex64 = psi_hat.iter().sum::<Complex64>() / psi_hat.len() as f64;
    if mean.norm() > 1e-300 {
        let rot = (mean / mean.norm()).conj();
        psi_hat.mapv_inplace(|v| v * rot);
    }

    Ok(FocalReconstruction {
        wave: ComplexField2D::new(psi_hat, grid)?,
        residuals,
        sweeps_run,
    })
}

/// Forward kernel (envelopes * exp(-i chi)) and backward phase-conjugate
/// kernel (exp(+i chi)) sampled on the reciprocal grid.
fn plane_kernels(grid: GridSpec, ctf: &CtfParams) -> (Array2<Complex64>, Array2<Complex64>) {
    let qx = fft_freqs(grid.nx, grid.pixel_nm);
    let qy = fft_freqs(grid.ny, grid.pixel_nm);
    let dq = grid.dqx().min(grid.dqy());
    let mut forward = Array2::from_elem((grid.ny, grid.nx), Complex64::new(0.0, 0.0));
    let mut backward = forward.clone();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let q = [qx[ix], qy[iy]];
            let (e_ap, e_coh, e_chr) = crate::optics::envelopes(q, ctf, dq);
            let chi = crate::optics::aberration_phase(q, ctf);
            forward[[iy, ix]] = Complex64::from_polar(e_ap * e_coh * e_chr, -chi);
            backward[[iy, ix]] = Complex64::from_polar(1.0, chi);
        }
    }
    (forward, backward)
}

/// Mean absolute pixel difference of two real arrays.
pub fn image_mae(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multislice::band_limited_random_field;
    use crate::potential::PhysicalSetup;
    use approx::assert_relative_eq;

    fn grid128() -> GridSpec {
        GridSpec::square(128, 0.02).unwrap()
    }

    fn carrier(grid: GridSpec, bins: i64) -> [f64; 2] {
        [bins as f64 * grid.dqx(), 0.0]
    }

    fn setup300() -> PhysicalSetup {
        PhysicalSetup::new(300.0).unwrap()
    }

    #[test]
    fn zero_wave_gives_unit_hologram() {
        let grid = grid128();
        let psi = ComplexField2D::filled(grid, Complex64::new(0.0, 0.0));
        let params = HologramParams::with_unit_contrast(carrier(grid, 12));
        let holo = synthesize_hologram(&psi, &params).unwrap();
        for v in holo.iter() {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_contrast_removes_fringes() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.2, 5);
        let mut params = HologramParams::with_unit_contrast(carrier(grid, 12));
        params.mtf = 0.0;
        let holo = synthesize_hologram(&psi, &params).unwrap();
        for (h, p) in holo.iter().zip(psi.values.iter()) {
            assert_relative_eq!(*h, 1.0 + p.norm_sqr(), max_relative = 1e-12);
        }
    }

    #[test]
    fn hologram_is_non_negative_for_unit_amplitude() {
        let grid = grid128();
        let mut psi = band_limited_random_field(grid, 0.15, 6);
        // normalize to |psi| <= 1
        let max = psi.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        psi.values.mapv_inplace(|v| v / max);
        let params = HologramParams::with_unit_contrast(carrier(grid, 20));
        let holo = synthesize_hologram(&psi, &params).unwrap();
        for v in holo.iter() {
            assert!(*v >= 0.0);
        }
    }

    #[test]
    fn hologram_spectrum_is_conjugate_symmetric() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.15, 7);
        let params = HologramParams::with_unit_contrast(carrier(grid, 16));
        let holo = synthesize_hologram(&psi, &params).unwrap();
        let spec = fft2(&holo.map(|&v| Complex64::new(v, 0.0)));
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let my = (grid.ny - iy) % grid.ny;
                let mx = (grid.nx - ix) % grid.nx;
                let diff = (spec[[iy, ix]] - spec[[my, mx]].conj()).norm();
                assert!(diff < 1e-10, "bin ({ix},{iy}): {diff}");
            }
        }
    }

    #[test]
    fn spectral_energy_confined_to_three_regions() {
        let grid = grid128();
        // spectrum radius well under |q_c|/2
        let psi = band_limited_random_field(grid, 0.12, 8);
        let jc = 24_i64;
        let params = HologramParams::with_unit_contrast(carrier(grid, jc));
        let holo = synthesize_hologram(&psi, &params).unwrap();
        let spec = fft2(&holo.map(|&v| Complex64::new(v, 0.0)));
        let support = 0.12 * grid.nyquist();
        // |psi|^2 support is twice the field's
        let center_r = 2.0 * support;
        let side_r = support;
        let q_c = params.q_c;
        let qx = fft_freqs(grid.nx, grid.pixel_nm);
        let qy = fft_freqs(grid.ny, grid.pixel_nm);
        let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        let mut leaked = 0.0;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let q = [qx[ix], qy[iy]];
                let d0 = (q[0] * q[0] + q[1] * q[1]).sqrt();
                let dp = ((q[0] - q_c[0]).powi(2) + (q[1] - q_c[1]).powi(2)).sqrt();
                let dm = ((q[0] + q_c[0]).powi(2) + (q[1] + q_c[1]).powi(2)).sqrt();
                let inside =
                    d0 <= center_r * 1.0001 || dp <= side_r * 1.0001 || dm <= side_r * 1.0001;
                if !inside {
                    leaked += spec[[iy, ix]].norm_sqr();
                }
            }
        }
        assert!(leaked < 1e-10 * total, "leak fraction {}", leaked / total);
    }

    #[test]
    fn off_lattice_carrier_rejected() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.2, 9);
        let params = HologramParams::with_unit_contrast([12.5 * grid.dqx(), 0.0]);
        assert!(matches!(
            synthesize_hologram(&psi, &params),
            Err(HolographyError::CarrierOffLattice(..))
        ));
    }

    #[test]
    fn carrier_outside_band_rejected() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.2, 10);
        let params = HologramParams::with_unit_contrast(carrier(grid, 60));
        assert!(matches!(
            synthesize_hologram(&psi, &params),
            Err(HolographyError::CarrierOutsideBand { .. })
        ));
    }

    #[test]
    fn sideband_round_trip_unit_contrast() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.08, 11);
        let jc = 30_i64;
        let q_c = carrier(grid, jc);
        let params = HologramParams::with_unit_contrast(q_c);
        let holo = synthesize_hologram(&psi, &params).unwrap();
        let crop = 0.1 * grid.nyquist();
        let recon = reconstruct_sideband(&holo, grid, q_c, Some(crop), 1.0).unwrap();
        let mae: f64 = psi
            .values
            .iter()
            .zip(recon.values.iter())
            .map(|(a, b)| (a - b).norm())
            .sum::<f64>()
            / psi.values.len() as f64;
        assert!(mae < 1e-6, "MAE {mae}");
    }

    #[test]
    fn sideband_round_trip_half_contrast() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.08, 12);
        let q_c = carrier(grid, 30);
        let mut params = HologramParams::with_unit_contrast(q_c);
        params.mu_inst = 0.5;
        let holo = synthesize_hologram(&psi, &params).unwrap();
        let recon =
            reconstruct_sideband(&holo, grid, q_c, Some(0.1 * grid.nyquist()), 0.5).unwrap();
        let mae: f64 = psi
            .values
            .iter()
            .zip(recon.values.iter())
            .map(|(a, b)| (a - b).norm())
            .sum::<f64>()
            / psi.values.len() as f64;
        assert!(mae < 1e-6, "MAE {mae}");
    }

    #[test]
    fn overlapping_crop_rejected() {
        let grid = grid128();
        let q_c = carrier(grid, 20);
        let holo = Array2::zeros((grid.ny, grid.nx));
        let q_mag = q_c[0];
        assert!(matches!(
            reconstruct_sideband(&holo, grid, q_c, Some(q_mag), 1.0),
            Err(HolographyError::SidebandOverlap { .. })
        ));
    }

    #[test]
    fn opposite_carriers_give_identical_holograms_for_real_waves() {
        // for real-valued psi the fringe term is even in q_c
        let grid = grid128();
        let mut psi = band_limited_random_field(grid, 0.15, 13);
        psi.values.mapv_inplace(|v| Complex64::new(v.re, 0.0));
        let q_c = carrier(grid, 18);
        let pos = synthesize_hologram(&psi, &HologramParams::with_unit_contrast(q_c)).unwrap();
        let neg = synthesize_hologram(
            &psi,
            &HologramParams::with_unit_contrast([-q_c[0], -q_c[1]]),
        )
        .unwrap();
        for (a, b) in pos.iter().zip(neg.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_series_examples() {
        let s = quadratic_defocus_series(0.0, 90.0, 4).unwrap();
        for (got, want) in s.iter().zip([0.0, 10.0, 40.0, 90.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }

        let s = quadratic_defocus_series(0.0, 100.0, 14).unwrap();
        assert_eq!(s.len(), 14);
        assert_relative_eq!(s[0], 0.0);
        assert_relative_eq!(s[13], 100.0, max_relative = 1e-12);
        // constant second differences
        let d2: Vec<f64> = s.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
        for v in &d2 {
            assert_relative_eq!(*v, d2[0], max_relative = 1e-9);
        }
        assert!(s.windows(2).all(|w| w[1] > w[0]));

        let s = quadratic_defocus_series(25.0, 25.0, 5).unwrap();
        assert!(s.iter().all(|&v| v == 25.0));

        assert!(matches!(
            quadratic_defocus_series(0.0, 10.0, 1),
            Err(HolographyError::BadCount(1))
        ));
    }

    #[test]
    fn zero_defocus_image_is_exit_intensity() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.3, 14);
        let ctf = CtfParams::identity(setup300());
        let series = generate_focal_series(&psi, &ctf, &[0.0]).unwrap();
        for (img, p) in series.images[0].iter().zip(psi.values.iter()) {
            assert!((img - p.norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn plane_wave_images_are_uniform() {
        let grid = grid128();
        let psi = ComplexField2D::filled(grid, Complex64::new(1.0, 0.0));
        let ctf = CtfParams::identity(setup300());
        let defoci = quadratic_defocus_series(0.0, 80.0, 5).unwrap();
        let series = generate_focal_series(&psi, &ctf, &defoci).unwrap();
        for img in &series.images {
            for v in img.iter() {
                assert_relative_eq!(*v, 1.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn structured_wave_images_differ_across_defoci() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.3, 15);
        let ctf = CtfParams::identity(setup300());
        let defoci = quadratic_defocus_series(0.0, 80.0, 4).unwrap();
        let series = generate_focal_series(&psi, &ctf, &defoci).unwrap();
        for i in 0..series.len() {
            for j in (i + 1)..series.len() {
                assert!(image_mae(&series.images[i], &series.images[j]) > 0.0);
            }
        }
    }

    #[test]
    fn single_image_reconstruction_is_measured_modulus() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.3, 16);
        let ctf = CtfParams::identity(setup300());
        let series = generate_focal_series(&psi, &ctf, &[0.0]).unwrap();
        let recon = reconstruct_focal_series(&series, 50).unwrap();
        for (w, img) in recon.wave.values.iter().zip(series.images[0].iter()) {
            assert!((w.re - img.sqrt()).abs() < 1e-12);
            assert_eq!(w.im, 0.0);
        }
    }

    #[test]
    fn focal_series_residual_non_increasing() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.25, 17);
        let ctf = CtfParams::identity(setup300());
        let defoci = quadratic_defocus_series(0.0, 60.0, 8).unwrap();
        let series = generate_focal_series(&psi, &ctf, &defoci).unwrap();
        let recon = reconstruct_focal_series(&series, 40).unwrap();
        for w in recon.residuals.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-12),
                "residual increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn focal_series_reconstruction_recovers_phase() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.2, 18);
        let ctf = CtfParams::identity(setup300());
        let defoci = quadratic_defocus_series(0.0, 80.0, 14).unwrap();
        let series = generate_focal_series(&psi, &ctf, &defoci).unwrap();
        let recon = reconstruct_focal_series(&series, 200).unwrap();
        // compare after optimal global-phase alignment
        let inner: Complex64 = recon
            .wave
            .values
            .iter()
            .zip(psi.values.iter())
            .map(|(r, p)| r.conj() * p)
            .sum();
        let rot = if inner.norm() > 0.0 {
            inner / inner.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mae: f64 = recon
            .wave
            .values
            .iter()
            .zip(psi.values.iter())
            .map(|(r, p)| (r * rot - p).norm())
            .sum::<f64>()
            / psi.values.len() as f64;
        let scale = psi.values.iter().map(|v| v.norm()).sum::<f64>() / psi.values.len() as f64;
        assert!(mae < 0.05 * scale.max(1.0), "MAE {mae}, scale {scale}");
    }

    #[test]
    fn reconstructions_agree_up_to_global_phase() {
        let grid = grid128();
        let psi = band_limited_random_field(grid, 0.2, 19);
        let ctf = CtfParams::identity(setup300());
        let defoci = quadratic_defocus_series(0.0, 60.0, 6).unwrap();
        let series = generate_focal_series(&psi, &ctf, &defoci).unwrap();
        let a = reconstruct_focal_series(&series, 30).unwrap();
        let b = reconstruct_focal_series(&series, 30).unwrap();
        for (x, y) in a.wave.values.iter().zip(b.wave.values.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_series_is_an_error() {
        let grid = grid128();
        let series = FocalSeries {
            images: vec![],
            defoci_nm: vec![],
            ctf_base: CtfParams::identity(setup300()),
            grid,
        };
        assert!(matches!(
            reconstruct_focal_series(&series, 10),
            Err(HolographyError::EmptySeries)
        ));
    }
}
