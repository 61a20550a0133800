//! On-disk formats: the EWF1 wavefunction binary with its JSON sidecar,
//! and focal-series directories of 32-bit float TIFFs with `series.json`.

use crate::grid::{ComplexField2D, GridError, GridSpec};
use crate::holography::FocalSeries;
use crate::optics::{CtfParams, CtfParamsJson};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Optics(#[from] crate::optics::OpticsError),
    #[error("bad magic {0:?}, expected \"EWF1\"")]
    BadMagic([u8; 4]),
    #[error("wavefunction file truncated: expected {expected} bytes of samples, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("tiff error: {0}")]
    Tiff(String),
    #[error("series.json lists {defoci} defoci but directory holds {images} images")]
    SeriesMismatch { defoci: usize, images: usize },
}

impl From<tiff::TiffError> for IoError {
    fn from(e: tiff::TiffError) -> Self {
        IoError::Tiff(e.to_string())
    }
}

const EWF_MAGIC: &[u8; 4] = b"EWF1";

/// Write complex samples: magic "EWF1", little-endian u32 nx, u32 ny,
/// f64 pixel_nm, then row-major interleaved f32 (re, im) pairs. Accepts
/// any dimensions (dataset records are 320x320 center crops).
pub fn write_wavefunction_raw(
    path: &Path,
    values: &Array2<Complex64>,
    pixel_nm: f64,
) -> Result<(), IoError> {
    let (ny, nx) = values.dim();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(EWF_MAGIC)?;
    w.write_all(&(nx as u32).to_le_bytes())?;
    w.write_all(&(ny as u32).to_le_bytes())?;
    w.write_all(&pixel_nm.to_le_bytes())?;
    for v in values.iter() {
        w.write_all(&(v.re as f32).to_le_bytes())?;
        w.write_all(&(v.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_wavefunction_raw(path: &Path) -> Result<(Array2<Complex64>, f64), IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != EWF_MAGIC {
        return Err(IoError::BadMagic(magic));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let nx = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let ny = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let pixel_nm = f64::from_le_bytes(f64buf);

    let expected = nx * ny * 8;
    let mut bytes = Vec::with_capacity(expected);
    r.read_to_end(&mut bytes)?;
    if bytes.len() < expected {
        return Err(IoError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    let mut values = Array2::from_elem((ny, nx), Complex64::new(0.0, 0.0));
    for (i, v) in values.iter_mut().enumerate() {
        let off = i * 8;
        let re = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let im = f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
        *v = Complex64::new(re as f64, im as f64);
    }
    Ok((values, pixel_nm))
}

/// Typed wrapper over [`write_wavefunction_raw`] for simulation fields.
pub fn write_wavefunction(path: &Path, field: &ComplexField2D) -> Result<(), IoError> {
    write_wavefunction_raw(path, &field.values, field.grid.pixel_nm)
}

/// Typed wrapper over [`read_wavefunction_raw`]; requires power-of-two
/// dimensions (the simulation grid contract).
pub fn read_wavefunction(path: &Path) -> Result<ComplexField2D, IoError> {
    let (values, pixel_nm) = read_wavefunction_raw(path)?;
    let (ny, nx) = values.dim();
    let grid = GridSpec::new(nx, ny, pixel_nm)?;
    Ok(ComplexField2D::new(values, grid)?)
}

/// Sidecar written next to a wavefunction as `<name>.meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WavefunctionMeta {
    pub params: crate::crystal::SimParams,
    /// Free-form provenance: source CIF path, generator version, etc.
    #[serde(default)]
    pub provenance: serde_json::Map<String, serde_json::Value>,
}

pub fn sidecar_path(wavefunction_path: &Path) -> std::path::PathBuf {
    let mut name = wavefunction_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".meta.json");
    wavefunction_path.with_file_name(name)
}

pub fn write_sidecar(wavefunction_path: &Path, meta: &WavefunctionMeta) -> Result<(), IoError> {
    let file = File::create(sidecar_path(wavefunction_path))?;
    serde_json::to_writer_pretty(BufWriter::new(file), meta)?;
    Ok(())
}

pub fn read_sidecar(wavefunction_path: &Path) -> Result<WavefunctionMeta, IoError> {
    let file = File::open(sidecar_path(wavefunction_path))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Write one real image as a single-channel 32-bit float TIFF.
pub fn write_f32_tiff(path: &Path, image: &Array2<f64>) -> Result<(), IoError> {
    let (ny, nx) = image.dim();
    let data: Vec<f32> = image.iter().map(|&v| v as f32).collect();
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = tiff::encoder::TiffEncoder::new(file)?;
    encoder.write_image::<tiff::encoder::colortype::Gray32Float>(nx as u32, ny as u32, &data)?;
    Ok(())
}

pub fn read_f32_tiff(path: &Path) -> Result<Array2<f64>, IoError> {
    let file = BufReader::new(File::open(path)?);
    let mut decoder = tiff::decoder::Decoder::new(file)?;
    let (nx, ny) = decoder.dimensions()?;
    let image = decoder.read_image()?;
    let data = match image {
        tiff::decoder::DecodingResult::F32(v) => v,
        other => {
            return Err(IoError::Tiff(format!(
                "expected 32-bit float samples, got {other:?}"
            )))
        }
    };
    if data.len() != (nx * ny) as usize {
        return Err(IoError::Truncated {
            expected: (nx * ny) as usize,
            got: data.len(),
        });
    }
    Ok(Array2::from_shape_vec(
        (ny as usize, nx as usize),
        data.into_iter().map(|v| v as f64).collect(),
    )
    .expect("dimensions already checked"))
}

/// `series.json` contents for a focal-series directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeriesMeta {
    pub defoci_nm: Vec<f64>,
    pub ctf: CtfParamsJson,
    pub pixel_nm: f64,
}

/// Write a focal series as `img_000.tif`, `img_001.tif`, ... plus
/// `series.json` in `dir`.
pub fn write_focal_series(dir: &Path, series: &FocalSeries) -> Result<(), IoError> {
    std::fs::create_dir_all(dir)?;
    for (i, image) in series.images.iter().enumerate() {
        write_f32_tiff(&dir.join(format!("img_{i:03}.tif")), image)?;
    }
    let meta = SeriesMeta {
        defoci_nm: series.defoci_nm.clone(),
        ctf: CtfParamsJson::from_params(&series.ctf_base),
        pixel_nm: series.grid.pixel_nm,
    };
    let file = File::create(dir.join("series.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &meta)?;
    Ok(())
}

pub fn read_focal_series(dir: &Path) -> Result<FocalSeries, IoError> {
    let meta: SeriesMeta =
        serde_json::from_reader(BufReader::new(File::open(dir.join("series.json"))?))?;
    let mut images = Vec::with_capacity(meta.defoci_nm.len());
    for i in 0..meta.defoci_nm.len() {
        let path = dir.join(format!("img_{i:03}.tif"));
        if !path.exists() {
            return Err(IoError::SeriesMismatch {
                defoci: meta.defoci_nm.len(),
                images: i,
            });
        }
        images.push(read_f32_tiff(&path)?);
    }
    let (ny, nx) = images
        .first()
        .map(|i| i.dim())
        .unwrap_or((1, 1));
    let grid = GridSpec::new(nx, ny, meta.pixel_nm)?;
    let ctf_base: CtfParams = meta.ctf.to_params()?;
    Ok(FocalSeries {
        images,
        defoci_nm: meta.defoci_nm,
        ctf_base,
        grid,
    })
}
