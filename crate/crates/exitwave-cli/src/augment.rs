//! Crop-and-dihedral augmentation of dataset records.
//!
//! Transform ids 0..8 encode the dihedral group of the square:
//! `id & 3` counterclockwise quarter turns, optionally preceded by a
//! horizontal flip when `id & 4` is set.

use exitwave::recon::PhasePair;
use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("crop {w}x{w} at origin ({x}, {y}) exceeds the {n}x{n} record")]
    CropOutOfBounds { w: usize, x: usize, y: usize, n: usize },
    #[error("transform id {0} outside [0, 8)")]
    BadTransform(u8),
}

/// One augmented training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub amplitude: Array2<f64>,
    pub phase: PhasePair,
    pub transform_id: u8,
    pub crop_origin: (usize, usize),
}

fn rot90_ccw(a: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = a.dim();
    Array2::from_shape_fn((nx, ny), |(i, j)| a[[j, nx - 1 - i]])
}

fn flip_h(a: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = a.dim();
    Array2::from_shape_fn((ny, nx), |(i, j)| a[[i, nx - 1 - j]])
}

/// Apply one of the eight square symmetries.
pub fn dihedral_transform(a: &Array2<f64>, transform_id: u8) -> Result<Array2<f64>, AugmentError> {
    if transform_id >= 8 {
        return Err(AugmentError::BadTransform(transform_id));
    }
    let mut out = if transform_id & 4 != 0 {
        flip_h(a)
    } else {
        a.clone()
    };
    for _ in 0..(transform_id & 3) {
        out = rot90_ccw(&out);
    }
    Ok(out)
}

/// The transform id undoing `transform_id` on square arrays.
pub fn inverse_transform_id(transform_id: u8) -> Result<u8, AugmentError> {
    if transform_id >= 8 {
        return Err(AugmentError::BadTransform(transform_id));
    }
    if transform_id & 4 == 0 {
        // pure rotation: invert the quarter-turn count
        Ok((4 - (transform_id & 3)) % 4)
    } else {
        // flip then rotate r: inverse is flip then rotate r again
        Ok(transform_id)
    }
}

/// Crop a w x w window at `crop_origin` (x, y), split into amplitude and
/// unit phase components, and apply the dihedral transform to all three
/// channels identically.
pub fn augment(
    values: &Array2<Complex64>,
    w: usize,
    transform_id: u8,
    crop_origin: (usize, usize),
) -> Result<AugmentedSample, AugmentError> {
    let (ny, nx) = values.dim();
    let (x0, y0) = crop_origin;
    if w == 0 || x0 + w > nx || y0 + w > ny {
        return Err(AugmentError::CropOutOfBounds {
            w,
            x: x0,
            y: y0,
            n: nx.min(ny),
        });
    }
    let crop = values.slice(ndarray::s![y0..y0 + w, x0..x0 + w]);
    let amplitude = crop.map(|v| v.norm());
    // unit-circle phase components; amplitude zero defaults to angle 0
    let cos = crop.map(|v| if v.norm() > 0.0 { v.re / v.norm() } else { 1.0 });
    let sin = crop.map(|v| if v.norm() > 0.0 { v.im / v.norm() } else { 0.0 });

    Ok(AugmentedSample {
        amplitude: dihedral_transform(&amplitude, transform_id)?,
        phase: PhasePair {
            cos_component: dihedral_transform(&cos, transform_id)?,
            sin_component: dihedral_transform(&sin, transform_id)?,
        },
        transform_id,
        crop_origin,
    })
}
