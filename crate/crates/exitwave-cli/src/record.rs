//! One dataset record: simulate, center-crop, normalize.

use crate::config::{DatasetConfig, Normalization};
use exitwave::crystal::{build_block, parse_cif, BlockError, CifError, SimParams};
use exitwave::multislice::{simulate_exit_wave, MultisliceError, SimulationConfig};
use exitwave::potential::{KirklandTable, PhysicalSetup, PotentialError};
use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Cif { path: String, source: CifError },
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Multislice(#[from] MultisliceError),
    #[error(transparent)]
    Physics(#[from] PotentialError),
    #[error("crop of {crop} px does not fit the {grid} px simulation grid")]
    CropTooLarge { crop: usize, grid: usize },
}

/// A simulated, cropped, normalized wavefunction plus its provenance.
#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub values: Array2<Complex64>,
    pub pixel_nm: f64,
    pub params: SimParams,
    pub source_cif: String,
    pub group: String,
    pub split: String,
}

impl DatasetRecord {
    pub fn rms_modulus(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// Center crop of a square array.
pub fn center_crop(values: &Array2<Complex64>, crop_n: usize) -> Option<Array2<Complex64>> {
    let (ny, nx) = values.dim();
    if crop_n > nx || crop_n > ny {
        return None;
    }
    let (y0, x0) = ((ny - crop_n) / 2, (nx - crop_n) / 2);
    Some(
        values
            .slice(ndarray::s![y0..y0 + crop_n, x0..x0 + crop_n])
            .to_owned(),
    )
}

/// Scale so the chosen field statistic is one.
pub fn normalize(values: &mut Array2<Complex64>, method: Normalization) {
    let n = values.len() as f64;
    let scale = match method {
        Normalization::Rms => (values.iter().map(|v| v.norm_sqr()).sum::<f64>() / n).sqrt(),
        Normalization::MeanModulus => values.iter().map(|v| v.norm()).sum::<f64>() / n,
    };
    if scale > 0.0 {
        let inv = 1.0 / scale;
        values.mapv_inplace(|v| v * inv);
    }
}

/// Simulate one record from a CIF and a parameter draw.
///
/// A block that loses all its atoms to occupancy sampling degenerates to
/// vacuum: the exit wave is the (normalized) incident plane wave.
pub fn generate_record(
    table: &KirklandTable,
    config: &DatasetConfig,
    params: &SimParams,
    cif_path: &std::path::Path,
    group: &str,
    split: &str,
) -> Result<DatasetRecord, RecordError> {
    let text = std::fs::read_to_string(cif_path).map_err(|source| RecordError::Read {
        path: cif_path.display().to_string(),
        source,
    })?;
    let crystal = parse_cif(&text).map_err(|source| RecordError::Cif {
        path: cif_path.display().to_string(),
        source,
    })?;
    let setup = PhysicalSetup::new(params.voltage_kv)?;
    let sim_config = SimulationConfig {
        grid_n: config.grid_n,
        dz_nm: config.dz_nm,
        ..SimulationConfig::default()
    };
    if config.crop_n > config.grid_n {
        return Err(RecordError::CropTooLarge {
            crop: config.crop_n,
            grid: config.grid_n,
        });
    }

    let (full, pixel_nm) = match build_block(&crystal, params) {
        Ok(block) => {
            let psi = simulate_exit_wave(&block, &setup, table, params.kirkland_n, &sim_config)?;
            let pixel = psi.grid.pixel_nm;
            (psi.values, pixel)
        }
        Err(BlockError::EmptyBlock) => {
            // vacuum: plane wave, trivially uniform
            let pad = exitwave::crystal::DEFAULT_PAD_XY_NM;
            let pixel = (params.width_nm + 2.0 * pad) / config.grid_n as f64;
            (
                Array2::from_elem(
                    (config.grid_n, config.grid_n),
                    Complex64::new(1.0, 0.0),
                ),
                pixel,
            )
        }
        Err(e) => return Err(e.into()),
    };

    let mut cropped = center_crop(&full, config.crop_n).ok_or(RecordError::CropTooLarge {
        crop: config.crop_n,
        grid: config.grid_n,
    })?;
    normalize(&mut cropped, config.normalization);

    Ok(DatasetRecord {
        values: cropped,
        pixel_nm,
        params: params.clone(),
        source_cif: cif_path.display().to_string(),
        group: group.to_string(),
        split: split.to_string(),
    })
}
