//! Multislice wave propagation: transmission through thin slices
//! alternating with Fourier-space Fresnel propagation, both band limited
//! against aliasing.

use crate::crystal::{partition_slices, BlockError, SpecimenBlock};
use crate::fft::{band_limit_field, band_limit_spectrum, fft2, fft_freqs, ifft2};
use crate::grid::{ComplexField2D, GridError, GridSpec, PotentialGrid, DEFAULT_BAND_LIMIT_FRACTION};
use crate::potential::{
    slice_potential, PhysicalSetup, PotentialError, KirklandTable, SlicePotentialOptions,
};
use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MultisliceError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Block(#[from] BlockError),
}

/// Fresnel propagator P(k) = exp(-i pi lambda k^2 dz) in FFT layout,
/// zeroed outside the band limit.
#[derive(Debug, Clone)]
pub struct PropagatorKernel {
    pub values: Array2<Complex64>,
    pub grid: GridSpec,
    pub dz_nm: f64,
}

/// How the transmission exponent treats the already-projected potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransmissionConvention {
    /// exp(i sigma V_z) with V_z in V nm (the projected potential already
    /// carries the thickness integral).
    #[default]
    Projected,
    /// exp(i sigma V_z dz): multiplies by the slice thickness again, for
    /// comparisons against conventions that store V_z as a mean potential.
    ExtraThicknessFactor,
}

/// Uniform unit-amplitude incident wave. The global exp(2 pi i z / lambda)
/// phase is dropped; only relative phase is observable.
pub fn incident_plane_wave(grid: GridSpec) -> ComplexField2D {
    ComplexField2D::filled(grid, Complex64::new(1.0, 0.0))
}

/// Specimen transmission function t = exp(i sigma V_z), band limited.
pub fn transmission_function(
    potential: &PotentialGrid,
    sigma: f64,
    convention: TransmissionConvention,
    dz_nm: f64,
    band_limit_fraction: f64,
) -> Result<ComplexField2D, MultisliceError> {
    let factor = match convention {
        TransmissionConvention::Projected => sigma,
        TransmissionConvention::ExtraThicknessFactor => sigma * dz_nm,
    };
    let raw = potential
        .values
        .map(|&v| Complex64::from_polar(1.0, factor * v));
    let limited = band_limit_field(&raw, potential.grid.pixel_nm, band_limit_fraction);
    let mut field = ComplexField2D::new(limited, potential.grid)?;
    field.band_limit_fraction = band_limit_fraction;
    Ok(field)
}

/// Reciprocal-space Fresnel propagator for one slice step.
pub fn propagator_kernel(
    grid: GridSpec,
    wavelength_nm: f64,
    dz_nm: f64,
    band_limit_fraction: f64,
) -> PropagatorKernel {
    let qx = fft_freqs(grid.nx, grid.pixel_nm);
    let qy = fft_freqs(grid.ny, grid.pixel_nm);
    let q_max = band_limit_fraction * grid.nyquist();
    let q_max2 = q_max * q_max;
    let values = Array2::from_shape_fn((grid.ny, grid.nx), |(iy, ix)| {
        let k2 = qx[ix] * qx[ix] + qy[iy] * qy[iy];
        if k2 > q_max2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -std::f64::consts::PI * wavelength_nm * k2 * dz_nm)
        }
    });
    PropagatorKernel {
        values,
        grid,
        dz_nm,
    }
}

/// One multislice step: psi' = IFT( P . FT(t . psi) ).
pub fn propagate_slice(
    psi: &ComplexField2D,
    transmission: &ComplexField2D,
    kernel: &PropagatorKernel,
) -> Result<ComplexField2D, MultisliceError> {
    psi.grid.ensure_matches(&transmission.grid)?;
    psi.grid.ensure_matches(&kernel.grid)?;
    let product = &psi.values * &transmission.values;
    let mut spectrum = fft2(&product);
    spectrum *= &kernel.values;
    let mut out = ComplexField2D::new(ifft2(&spectrum), psi.grid)?;
    out.band_limit_fraction = psi.band_limit_fraction;
    Ok(out)
}

/// Free-space propagation (t = 1) by one kernel step.
pub fn propagate_vacuum(
    psi: &ComplexField2D,
    kernel: &PropagatorKernel,
) -> Result<ComplexField2D, MultisliceError> {
    psi.grid.ensure_matches(&kernel.grid)?;
    let mut spectrum = fft2(&psi.values);
    spectrum *= &kernel.values;
    let mut out = ComplexField2D::new(ifft2(&spectrum), psi.grid)?;
    out.band_limit_fraction = psi.band_limit_fraction;
    Ok(out)
}

/// Configuration for a full exit-wave simulation.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub grid_n: usize,
    pub dz_nm: f64,
    pub band_limit_fraction: f64,
    pub convention: TransmissionConvention,
    pub potential_options: SlicePotentialOptions,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            grid_n: 512,
            dz_nm: 0.2,
            band_limit_fraction: DEFAULT_BAND_LIMIT_FRACTION,
            convention: TransmissionConvention::Projected,
            potential_options: SlicePotentialOptions::default(),
        }
    }
}

/// Run the full multislice pipeline for one specimen block:
/// incident plane wave, then per slice potential -> transmission ->
/// propagation. The pixel size is set by the padded block width.
pub fn simulate_exit_wave(
    block: &SpecimenBlock,
    setup: &PhysicalSetup,
    table: &KirklandTable,
    kirkland_n: usize,
    config: &SimulationConfig,
) -> Result<ComplexField2D, MultisliceError> {
    let pixel = block.padded_width_nm() / config.grid_n as f64;
    let grid = GridSpec::square(config.grid_n, pixel)?;
    let stack = partition_slices(block, config.dz_nm)?;
    let kernel = propagator_kernel(
        grid,
        setup.wavelength_nm(),
        config.dz_nm,
        config.band_limit_fraction,
    );
    let mut opts = config.potential_options;
    opts.clamp_fraction = opts.clamp_fraction.max(1e-6);
    let pad = block.pad_xy_nm;
    let mut psi = incident_plane_wave(grid);
    psi.band_limit_fraction = config.band_limit_fraction;
    for slice in &stack.slices {
        if slice.is_empty() {
            psi = propagate_vacuum(&psi, &kernel)?;
            continue;
        }
        // shift atoms into padded field coordinates
        let shifted: Vec<_> = slice
            .iter()
            .map(|a| crate::crystal::Atom {
                z: a.z,
                position: [a.position[0] + pad, a.position[1] + pad, a.position[2]],
            })
            .collect();
        let potential = slice_potential(&shifted, grid, table, kirkland_n, opts)?;
        let t = transmission_function(
            &potential,
            setup.interaction_constant,
            config.convention,
            config.dz_nm,
            config.band_limit_fraction,
        )?;
        psi = propagate_slice(&psi, &t, &kernel)?;
    }
    Ok(psi)
}

/// Build a field whose spectrum is strictly inside the band limit, for
/// tests and synthetic inputs.
pub fn band_limited_random_field(grid: GridSpec, fraction: f64, seed: u64) -> ComplexField2D {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = Array2::from_shape_fn((grid.ny, grid.nx), |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    band_limit_spectrum(&mut spectrum, grid.pixel_nm, fraction);
    let mut field = ComplexField2D::new(ifft2(&spectrum), grid).expect("matching dims");
    field.band_limit_fraction = fraction;
    field
}
