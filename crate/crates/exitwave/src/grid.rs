//! Real-space sampling grids and the complex wavefield that flows through
//! the simulation pipeline.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default anti-alias band limit as a fraction of Nyquist.
pub const DEFAULT_BAND_LIMIT_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimensions must be powers of two, got {0}x{1}")]
    NonPowerOfTwo(usize, usize),
    #[error("pixel size must be positive, got {0}")]
    NonPositivePixel(f64),
    #[error("grids do not match: {0}x{1} px {2} vs {3}x{4} px {5}")]
    GridMismatch(usize, usize, f64, usize, usize, f64),
}

/// Uniform real-space sampling grid. `pixel_nm` is the sample pitch; pixel
/// (ix, iy) sits at (ix * pixel_nm, iy * pixel_nm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub pixel_nm: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, pixel_nm: f64) -> Result<Self, GridError> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() {
            return Err(GridError::NonPowerOfTwo(nx, ny));
        }
        if pixel_nm <= 0.0 {
            return Err(GridError::NonPositivePixel(pixel_nm));
        }
        Ok(Self { nx, ny, pixel_nm })
    }

    pub fn square(n: usize, pixel_nm: f64) -> Result<Self, GridError> {
        Self::new(n, n, pixel_nm)
    }

    /// Nyquist frequency along the finer axis, cycles/nm.
    pub fn nyquist(&self) -> f64 {
        0.5 / self.pixel_nm
    }

    /// Reciprocal-space bin spacing along x, cycles/nm.
    pub fn dqx(&self) -> f64 {
        1.0 / (self.nx as f64 * self.pixel_nm)
    }

    /// Reciprocal-space bin spacing along y, cycles/nm.
    pub fn dqy(&self) -> f64 {
        1.0 / (self.ny as f64 * self.pixel_nm)
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.pixel_nm - other.pixel_nm).abs() < 1e-12 * self.pixel_nm
    }

    pub fn ensure_matches(&self, other: &GridSpec) -> Result<(), GridError> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(GridError::GridMismatch(
                self.nx,
                self.ny,
                self.pixel_nm,
                other.nx,
                other.ny,
                other.pixel_nm,
            ))
        }
    }
}

/// Sampled complex wavefunction on a uniform grid. Array is indexed
/// [row = iy][col = ix].
#[derive(Debug, Clone)]
pub struct ComplexField2D {
    pub values: Array2<Complex64>,
    pub grid: GridSpec,
    pub band_limit_fraction: f64,
}

impl ComplexField2D {
    pub fn new(values: Array2<Complex64>, grid: GridSpec) -> Result<Self, GridError> {
        let (ny, nx) = values.dim();
        if ny != grid.ny || nx != grid.nx {
            return Err(GridError::GridMismatch(
                grid.nx, grid.ny, grid.pixel_nm, nx, ny, grid.pixel_nm,
            ));
        }
        Ok(Self {
            values,
            grid,
            band_limit_fraction: DEFAULT_BAND_LIMIT_FRACTION,
        })
    }

    pub fn filled(grid: GridSpec, value: Complex64) -> Self {
        Self {
            values: Array2::from_elem((grid.ny, grid.nx), value),
            grid,
            band_limit_fraction: DEFAULT_BAND_LIMIT_FRACTION,
        }
    }

    /// Total intensity, sum of |psi|^2 over all pixels.
    pub fn total_intensity(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.values.map(|v| v.norm_sqr())
    }
}

/// Real projected potential sampled at pixel centers, V nm.
#[derive(Debug, Clone)]
pub struct PotentialGrid {
    pub values: Array2<f64>,
    pub grid: GridSpec,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(
            GridSpec::new(100, 128, 0.01),
            Err(GridError::NonPowerOfTwo(..))
        ));
    }

    #[test]
    fn nyquist_and_bin_spacing() {
        let g = GridSpec::square(256, 0.02).unwrap();
        assert!((g.nyquist() - 25.0).abs() < 1e-12);
        assert!((g.dqx() - 1.0 / 5.12).abs() < 1e-12);
    }
}
