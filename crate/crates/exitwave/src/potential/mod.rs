//! Electron-optical constants and projected atomic potentials.
//!
//! Potentials use the Kirkland three-term Bessel + three-term Gaussian
//! parameterization. Parameter tables are plain-text inputs (see
//! `KirklandTable::parse`); a table derived from Moliere screening is
//! bundled as a default.

mod bessel;
mod kirkland;

pub use bessel::{bessel_k0, BesselError};
pub use kirkland::{KirklandParams, KirklandTable, TableError};

use crate::constants::*;
use crate::crystal::Atom;
use crate::grid::{GridSpec, PotentialGrid};
use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("acceleration voltage must be positive, got {0} kV")]
    NonPositiveVoltage(f64),
    #[error("no potential parameters for element Z={0}")]
    UnknownElement(u8),
    #[error("projected potential is singular at zero radius")]
    ZeroRadius,
    #[error("Kirkland truncation order must be 1 or 3, got {0}")]
    BadTruncation(usize),
    #[error("grid pixel size must be positive, got {0}")]
    NonPositivePixel(f64),
}

/// Relativistic electron wavelength, pm, for an acceleration voltage in kV.
///
/// lambda = h c / sqrt(e V (2 m0 c^2 + e V)).
pub fn electron_wavelength_pm(voltage_kv: f64) -> Result<f64, PotentialError> {
    if voltage_kv <= 0.0 {
        return Err(PotentialError::NonPositiveVoltage(voltage_kv));
    }
    let ev_joule = ELEMENTARY_CHARGE * voltage_kv * VOLTS_PER_KILOVOLT;
    let lambda_m = PLANCK * SPEED_OF_LIGHT
        / (ev_joule * (2.0 * ELECTRON_REST_ENERGY + ev_joule)).sqrt();
    Ok(lambda_m * 1e12)
}

/// Interaction constant sigma = 2 pi m e lambda / h^2 with relativistic
/// mass m = m0 (1 + eV / m0 c^2). Units: rad / (V nm).
pub fn interaction_constant(voltage_kv: f64) -> Result<f64, PotentialError> {
    let lambda_m = electron_wavelength_pm(voltage_kv)? * 1e-12;
    let ev_joule = ELEMENTARY_CHARGE * voltage_kv * VOLTS_PER_KILOVOLT;
    let mass = ELECTRON_MASS * (1.0 + ev_joule / ELECTRON_REST_ENERGY);
    let sigma_per_vm = 2.0 * std::f64::consts::PI * mass * ELEMENTARY_CHARGE
        * lambda_m
        / (PLANCK * PLANCK);
    Ok(sigma_per_vm * 1e-9) // 1/(V m) -> 1/(V nm)
}

/// Relativistically corrected acceleration voltage U* = U (1 + eU / 2 m0 c^2),
/// in volts. The chromatic envelope divides by this.
pub fn corrected_voltage(voltage_kv: f64) -> Result<f64, PotentialError> {
    if voltage_kv <= 0.0 {
        return Err(PotentialError::NonPositiveVoltage(voltage_kv));
    }
    let u = voltage_kv * VOLTS_PER_KILOVOLT;
    let eu = ELEMENTARY_CHARGE * u;
    Ok(u * (1.0 + eu / (2.0 * ELECTRON_REST_ENERGY)))
}

/// Voltage-derived constants used throughout the optics pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSetup {
    pub voltage_kv: f64,
    pub wavelength_pm: f64,
    /// rad / (V nm)
    pub interaction_constant: f64,
    /// kg
    pub relativistic_mass: f64,
    /// volts
    pub corrected_voltage: f64,
}

impl PhysicalSetup {
    pub fn new(voltage_kv: f64) -> Result<Self, PotentialError> {
        let wavelength_pm = electron_wavelength_pm(voltage_kv)?;
        let ev_joule = ELEMENTARY_CHARGE * voltage_kv * VOLTS_PER_KILOVOLT;
        Ok(Self {
            voltage_kv,
            wavelength_pm,
            interaction_constant: interaction_constant(voltage_kv)?,
            relativistic_mass: ELECTRON_MASS * (1.0 + ev_joule / ELECTRON_REST_ENERGY),
            corrected_voltage: corrected_voltage(voltage_kv)?,
        })
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_pm * NM_PER_PM
    }
}

/// Projected potential of a single atom at in-plane radius `r_nm`, V nm.
///
/// v_p(r) = 4 pi^2 e a0 sum_i^n a_i K0(2 pi r sqrt(b_i))
///        + 2 pi^2 e a0 sum_i^n (c_i / d_i) exp(-pi^2 r^2 / d_i)
///
/// with both sums truncated to the same order n (1 or 3).
pub fn atom_projected_potential(
    z: u8,
    r_nm: f64,
    table: &KirklandTable,
    n: usize,
) -> Result<f64, PotentialError> {
    if !(n == 1 || n == 3) {
        return Err(PotentialError::BadTruncation(n));
    }
    if r_nm <= 0.0 {
        return Err(PotentialError::ZeroRadius);
    }
    let params = table.get(z).ok_or(PotentialError::UnknownElement(z))?;
    let r = r_nm * ANGSTROM_PER_NM; // table convention is Angstrom based
    let two_pi = 2.0 * std::f64::consts::PI;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mut bessel_sum = 0.0;
    let mut gauss_sum = 0.0;
    for i in 0..n {
        // b_i > 0 validated at load time, so K0 argument is positive
        bessel_sum += params.a[i]
            * bessel_k0(two_pi * r * params.b[i].sqrt()).expect("positive argument");
        gauss_sum += params.c[i] / params.d[i] * (-pi2 * r * r / params.d[i]).exp();
    }
    let v_angstrom = 4.0 * pi2 * COULOMB_E_V_ANGSTROM * BOHR_RADIUS_ANGSTROM * bessel_sum
        + 2.0 * pi2 * COULOMB_E_V_ANGSTROM * BOHR_RADIUS_ANGSTROM * gauss_sum;
    Ok(v_angstrom * NM_PER_ANGSTROM) // V Angstrom -> V nm
}

/// Options controlling per-pixel evaluation of a slice potential.
#[derive(Debug, Clone, Copy)]
pub struct SlicePotentialOptions {
    /// Contributions beyond this radius are dropped, nm.
    pub cutoff_nm: f64,
    /// Pixels closer than pixel/4 to an atom evaluate at that radius
    /// instead (the K0 singularity is clamped). Set from the grid.
    pub clamp_fraction: f64,
}

impl Default for SlicePotentialOptions {
    fn default() -> Self {
        Self {
            cutoff_nm: 0.5,
            clamp_fraction: 0.25,
        }
    }
}

/// Total projected potential of a slice: V_z(x, y) = sum_p v_p, sampled at
/// pixel centers. Parallel over rows.
pub fn slice_potential(
    atoms: &[Atom],
    grid: GridSpec,
    table: &KirklandTable,
    n: usize,
    opts: SlicePotentialOptions,
) -> Result<PotentialGrid, PotentialError> {
    if grid.pixel_nm <= 0.0 {
        return Err(PotentialError::NonPositivePixel(grid.pixel_nm));
    }
    if !(n == 1 || n == 3) {
        return Err(PotentialError::BadTruncation(n));
    }
    for atom in atoms {
        if table.get(atom.z).is_none() {
            return Err(PotentialError::UnknownElement(atom.z));
        }
    }
    let px = grid.pixel_nm;
    let r_min = opts.clamp_fraction * px;
    let cutoff2 = opts.cutoff_nm * opts.cutoff_nm;
    let mut values = Array2::zeros((grid.ny, grid.nx));
    values
        .outer_iter_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(iy, mut row)| {
            let y = iy as f64 * px;
            for (ix, cell) in row.iter_mut().enumerate() {
                let x = ix as f64 * px;
                let mut v = 0.0;
                for atom in atoms {
                    let dx = x - atom.position[0];
                    let dy = y - atom.position[1];
                    let r2 = dx * dx + dy * dy;
                    if r2 > cutoff2 {
                        continue;
                    }
                    let r = r2.sqrt().max(r_min);
                    v += atom_projected_potential(atom.z, r, table, n)
                        .expect("validated above");
                }
                *cell = v;
            }
        });
    Ok(PotentialGrid { values, grid })
}
