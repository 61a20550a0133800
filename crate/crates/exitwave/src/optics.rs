//! Contrast transfer function optics: aberration phase, aperture /
//! coherence / chromatic envelopes, image-wave formation, detector
//! intensity measurement, and the two-beam potential inversion.

use crate::constants::NM_PER_MM;
use crate::fft::{fft2, fft_freqs, ifft2};
use crate::grid::{ComplexField2D, GridError};
use crate::potential::PhysicalSetup;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("aberration order (n={n}, m={m}) invalid: requires m + n odd and m <= n + 1")]
    BadAberrationOrder { n: u32, m: u32 },
    #[error("detector support of {support} px does not tile a {nx}x{ny} field")]
    IncompatibleTiling { support: usize, nx: usize, ny: usize },
    #[error("supersampling factor must be >= 1")]
    BadSupersample,
    #[error("thickness {z_nm} nm is at an extinction resonance of xi = {xi_nm} nm")]
    ExtinctionResonance { z_nm: f64, xi_nm: f64 },
    #[error(transparent)]
    Physics(#[from] crate::potential::PotentialError),
}

/// Aberration coefficients C_{n,m,a} / C_{n,m,b} in nm, keyed by (n, m).
/// Only orders with m + n odd and m <= n + 1 are representable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AberrationSet {
    coefficients: BTreeMap<(u32, u32), (f64, f64)>,
}

impl AberrationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, n: u32, m: u32, a_nm: f64, b_nm: f64) -> Result<(), OpticsError> {
        if (n + m) % 2 == 0 || m > n + 1 {
            return Err(OpticsError::BadAberrationOrder { n, m });
        }
        self.coefficients.insert((n, m), (a_nm, b_nm));
        Ok(())
    }

    /// Defocus is C_{1,0,a}.
    pub fn with_defocus(mut self, defocus_nm: f64) -> Self {
        self.coefficients.insert((1, 0), (defocus_nm, 0.0));
        self
    }

    pub fn defocus_nm(&self) -> f64 {
        self.coefficients.get(&(1, 0)).map(|c| c.0).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, u32), &(f64, f64))> {
        self.coefficients.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Scale applied to the aberration polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChiConvention {
    /// chi = (2 pi / lambda) * sum(...): coefficients are lengths (nm).
    #[default]
    Scaled,
    /// chi = sum(...) with no prefactor, for literal comparisons against
    /// conventions that bake the scale into the coefficients.
    Raw,
}

/// Everything needed to apply the CTF to a diffracted wave.
#[derive(Debug, Clone, PartialEq)]
pub struct CtfParams {
    /// Objective aperture semi-angle, rad.
    pub theta_max_rad: f64,
    /// Illumination semi-angle, rad.
    pub theta_coh_rad: f64,
    /// Energy spread, eV.
    pub delta_e_ev: f64,
    /// Chromatic aberration coefficient, mm.
    pub cc_mm: f64,
    pub aberrations: AberrationSet,
    pub setup: PhysicalSetup,
    pub chi_convention: ChiConvention,
}

impl CtfParams {
    /// Identity-like CTF: huge aperture, no spreads, no aberrations.
    /// The aperture is finite (1000 rad) so the parameters stay JSON
    /// serializable, but it cuts nothing on any realistic grid.
    pub fn identity(setup: PhysicalSetup) -> Self {
        Self {
            theta_max_rad: 1e3,
            theta_coh_rad: 0.0,
            delta_e_ev: 0.0,
            cc_mm: 0.0,
            aberrations: AberrationSet::new(),
            setup,
            chi_convention: ChiConvention::Scaled,
        }
    }

    pub fn with_defocus(mut self, defocus_nm: f64) -> Self {
        self.aberrations = self.aberrations.with_defocus(defocus_nm);
        self
    }

    /// Electron wavenumber k = 1/lambda, 1/nm.
    pub fn wavenumber(&self) -> f64 {
        1.0 / self.setup.wavelength_nm()
    }
}

/// Aberration phase chi at reciprocal vector q (1/nm), rad.
///
/// chi(theta, phi) = prefactor * sum_{n,m} [C_a cos(m phi) + C_b sin(m phi)]
///                   * theta^{n+1} / (n+1),  theta = |q| / k.
pub fn aberration_phase(q: [f64; 2], params: &CtfParams) -> f64 {
    if params.aberrations.is_empty() {
        return 0.0;
    }
    let k = params.wavenumber();
    let q_mag = (q[0] * q[0] + q[1] * q[1]).sqrt();
    let theta = q_mag / k;
    let phi = q[1].atan2(q[0]);
    let mut sum = 0.0;
    for (&(n, m), &(ca, cb)) in params.aberrations.iter() {
        let radial = theta.powi(n as i32 + 1) / (n as f64 + 1.0);
        let ang = m as f64 * phi;
        sum += radial * (ca * ang.cos() + cb * ang.sin());
    }
    match params.chi_convention {
        ChiConvention::Scaled => 2.0 * std::f64::consts::PI / params.setup.wavelength_nm() * sum,
        ChiConvention::Raw => sum,
    }
}

/// The three CTF envelopes at q. `dq` is the finite-difference step for
/// the chi gradient in the coherence envelope (one reciprocal pixel).
pub fn envelopes(q: [f64; 2], params: &CtfParams, dq: f64) -> (f64, f64, f64) {
    let k = params.wavenumber();
    let q_mag = (q[0] * q[0] + q[1] * q[1]).sqrt();

    // aperture: inclusive boundary
    let e_ap = if q_mag <= k * params.theta_max_rad * (1.0 + 1e-12) {
        1.0
    } else {
        0.0
    };

    // coherence: exp(-(grad chi)^2 (k theta_coh)^2 / (4 ln 2))
    let e_coh = if params.theta_coh_rad == 0.0 || params.aberrations.is_empty() {
        1.0
    } else {
        let gx = (aberration_phase([q[0] + dq, q[1]], params)
            - aberration_phase([q[0] - dq, q[1]], params))
            / (2.0 * dq);
        let gy = (aberration_phase([q[0], q[1] + dq], params)
            - aberration_phase([q[0], q[1] - dq], params))
            / (2.0 * dq);
        let grad2 = gx * gx + gy * gy;
        let kt = k * params.theta_coh_rad;
        (-grad2 * kt * kt / (4.0 * (2.0_f64).ln())).exp()
    };

    // chromatic: exp(-1/2 (pi k Cc dE/U* (q/k)^2)^2)
    let e_chr = if params.delta_e_ev == 0.0 || params.cc_mm == 0.0 {
        1.0
    } else {
        let cc_nm = params.cc_mm * NM_PER_MM;
        let ratio = q_mag / k;
        let arg = std::f64::consts::PI * k * cc_nm * params.delta_e_ev
            / params.setup.corrected_voltage
            * ratio
            * ratio;
        (-0.5 * arg * arg).exp()
    };

    (e_ap, e_coh, e_chr)
}

/// Apply the full CTF: psi_img = IFT( E_ap E_coh E_chr exp(-i chi) FT(psi) ).
pub fn apply_ctf(psi_exit: &ComplexField2D, params: &CtfParams) -> Result<ComplexField2D, OpticsError> {
    let grid = psi_exit.grid;
    let qx = fft_freqs(grid.nx, grid.pixel_nm);
    let qy = fft_freqs(grid.ny, grid.pixel_nm);
    let dq = grid.dqx().min(grid.dqy());
    let mut spectrum = fft2(&psi_exit.values);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let q = [qx[ix], qy[iy]];
            let (e_ap, e_coh, e_chr) = envelopes(q, params, dq);
            let env = e_ap * e_coh * e_chr;
            if env == 0.0 {
                spectrum[[iy, ix]] = Complex64::new(0.0, 0.0);
                continue;
            }
            let chi = aberration_phase(q, params);
            spectrum[[iy, ix]] *= Complex64::from_polar(env, -chi);
        }
    }
    let mut out = ComplexField2D::new(ifft2(&spectrum), grid)?;
    out.band_limit_fraction = psi_exit.band_limit_fraction;
    Ok(out)
}

/// Square detector supports tiling the field, with optional spectral
/// supersampling before integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorGeometry {
    /// Support edge in field pixels; must divide both grid dimensions.
    pub support_px: usize,
    /// Sub-samples per axis per field pixel. 1 selects the center-sample
    /// fast path I(S) ~ |psi(S_center)|^2 * area.
    pub supersample: usize,
}

/// Integrate |psi|^2 over each detector support.
///
/// With supersample > 1 the wave is Fourier-interpolated (spectral
/// zero-padding) onto the finer grid and |psi|^2 is averaged over each
/// support before multiplying by the support area.
pub fn measure_intensity(
    psi_img: &ComplexField2D,
    detector: &DetectorGeometry,
) -> Result<Array2<f64>, OpticsError> {
    let grid = psi_img.grid;
    let b = detector.support_px;
    let s = detector.supersample;
    if s < 1 {
        return Err(OpticsError::BadSupersample);
    }
    if b == 0 || grid.nx % b != 0 || grid.ny % b != 0 {
        return Err(OpticsError::IncompatibleTiling {
            support: b,
            nx: grid.nx,
            ny: grid.ny,
        });
    }
    let (sx, sy) = (grid.nx / b, grid.ny / b);
    let area = (b as f64 * grid.pixel_nm).powi(2);
    let mut out = Array2::zeros((sy, sx));

    if s == 1 {
        // fast path: center sample per support
        for iy in 0..sy {
            for ix in 0..sx {
                let cy = iy * b + b / 2;
                let cx = ix * b + b / 2;
                out[[iy, ix]] = psi_img.values[[cy, cx]].norm_sqr() * area;
            }
        }
        return Ok(out);
    }

    let fine = fourier_interpolate(&psi_img.values, s);
    let fb = b * s;
    let samples = (fb * fb) as f64;
    for iy in 0..sy {
        for ix in 0..sx {
            let mut acc = 0.0;
            for jy in 0..fb {
                for jx in 0..fb {
                    acc += fine[[iy * fb + jy, ix * fb + jx]].norm_sqr();
                }
            }
            out[[iy, ix]] = acc / samples * area;
        }
    }
    Ok(out)
}

/// Band-limited interpolation onto an s-times finer grid by spectral
/// zero-padding.
pub fn fourier_interpolate(values: &Array2<Complex64>, s: usize) -> Array2<Complex64> {
    let (ny, nx) = values.dim();
    let spectrum = fft2(values);
    let (fy, fx) = (ny * s, nx * s);
    let mut padded = Array2::from_elem((fy, fx), Complex64::new(0.0, 0.0));
    for iy in 0..ny {
        let ty = if iy <= ny / 2 - 1 { iy } else { fy - (ny - iy) };
        for ix in 0..nx {
            let tx = if ix <= nx / 2 - 1 { ix } else { fx - (nx - ix) };
            padded[[ty, tx]] = spectrum[[iy, ix]];
        }
    }
    let mut fine = ifft2(&padded);
    let scale = s as f64;
    fine.mapv_inplace(|v| v * scale);
    fine
}

/// Which mean is subtracted in the two-beam inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TwoBeamMeanGrouping {
    /// Im((psi - <psi>) e^{i phi}): a constant wave inverts to zero.
    #[default]
    RotatedMean,
    /// Im(psi e^{i phi} - <psi>): literal reading with the mean outside
    /// the phase rotation.
    UnrotatedMean,
}

/// Two-beam projected potential inversion:
/// U(r) = Im(psi e^{i phi} - <psi>) / (lambda xi sin(pi z / xi)).
pub fn two_beam_projected_potential(
    psi_exit: &ComplexField2D,
    phase_rad: f64,
    xi_nm: f64,
    z_nm: f64,
    wavelength_nm: f64,
    grouping: TwoBeamMeanGrouping,
) -> Result<Array2<f64>, OpticsError> {
    let sin_term = (std::f64::consts::PI * z_nm / xi_nm).sin();
    if sin_term.abs() <= 1e-6 {
        return Err(OpticsError::ExtinctionResonance { z_nm, xi_nm });
    }
    let denom = wavelength_nm * xi_nm * sin_term;
    let rot = Complex64::from_polar(1.0, phase_rad);
    let n = psi_exit.values.len() as f64;
    let mean: Complex64 = psi_exit.values.iter().sum::<Complex64>() / n;
    let out = psi_exit.values.map(|&v| match grouping {
        TwoBeamMeanGrouping::RotatedMean => ((v - mean) * rot).im / denom,
        TwoBeamMeanGrouping::UnrotatedMean => (v * rot - mean).im / denom,
    });
    Ok(out)
}

// --- JSON wire format ----------------------------------------------------

/// Serializable form of [`CtfParams`]. Aberration values are in nm.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CtfParamsJson {
    pub voltage_kv: f64,
    pub theta_max_mrad: f64,
    pub theta_coh_mrad: f64,
    pub delta_e_ev: f64,
    pub cc_mm: f64,
    #[serde(default)]
    pub aberrations: Vec<AberrationJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AberrationJson {
    pub n: u32,
    pub m: u32,
    /// C_{n,m,a}, nm.
    #[serde(default)]
    pub a: f64,
    /// C_{n,m,b}, nm.
    #[serde(default)]
    pub b: f64,
}

impl CtfParamsJson {
    pub fn to_params(&self) -> Result<CtfParams, OpticsError> {
        let setup = PhysicalSetup::new(self.voltage_kv)?;
        let mut aberrations = AberrationSet::new();
        for ab in &self.aberrations {
            aberrations.set(ab.n, ab.m, ab.a, ab.b)?;
        }
        Ok(CtfParams {
            theta_max_rad: self.theta_max_mrad * 1e-3,
            theta_coh_rad: self.theta_coh_mrad * 1e-3,
            delta_e_ev: self.delta_e_ev,
            cc_mm: self.cc_mm,
            aberrations,
            setup,
            chi_convention: ChiConvention::Scaled,
        })
    }

    pub fn from_params(params: &CtfParams) -> Self {
        Self {
            voltage_kv: params.setup.voltage_kv,
            theta_max_mrad: params.theta_max_rad * 1e3,
            theta_coh_mrad: params.theta_coh_rad * 1e3,
            delta_e_ev: params.delta_e_ev,
            cc_mm: params.cc_mm,
            aberrations: params
                .aberrations
                .iter()
                .map(|(&(n, m), &(a, b))| AberrationJson { n, m, a, b })
                .collect(),
        }
    }
}
