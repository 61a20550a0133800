//! Dataset configuration schema (the `--config` JSON file).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config requests {0} records but lists no CIF sources")]
    NoSources(usize),
    #[error("record count must be positive")]
    NoRecords,
    #[error("single-material mode requires exactly one CIF source, found {0}")]
    NotSingleMaterial(usize),
    #[error("restricted factor must be in (0, 1], got {0}")]
    BadRestrictedFactor(f64),
    #[error("source group {group:?} has no split assignment")]
    UnmappedGroup { group: String },
}

/// Parameter-support mode for sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Unrestricted,
    /// Depth and width upper bounds pulled in by `restricted_factor`
    /// of the range above each lower bound.
    Restricted,
    /// All records from the first listed CIF.
    SingleMaterial,
}

/// How a record's wavefunction is normalized after cropping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the RMS modulus so mean intensity is 1.
    #[default]
    Rms,
    /// Divide by the mean modulus over the field.
    MeanModulus,
}

/// One CIF source with its grouping key (e.g. journal of publication)
/// used for split partitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CifSource {
    pub path: PathBuf,
    pub group: String,
}

fn default_grid_n() -> usize {
    512
}
fn default_crop_n() -> usize {
    320
}
fn default_dz_nm() -> f64 {
    0.2
}
fn default_restricted_factor() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub sources: Vec<CifSource>,
    pub records: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: SamplingMode,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_crop_n")]
    pub crop_n: usize,
    #[serde(default = "default_dz_nm")]
    pub dz_nm: f64,
    #[serde(default = "default_restricted_factor")]
    pub restricted_factor: f64,
    /// Group key -> split name ("train" | "unseen" | "validation" | "test").
    pub splits: BTreeMap<String, String>,
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.records == 0 {
            return Err(ConfigError::NoRecords);
        }
        if self.sources.is_empty() {
            return Err(ConfigError::NoSources(self.records));
        }
        if self.mode == SamplingMode::SingleMaterial && self.sources.len() != 1 {
            return Err(ConfigError::NotSingleMaterial(self.sources.len()));
        }
        if !(self.restricted_factor > 0.0 && self.restricted_factor <= 1.0) {
            return Err(ConfigError::BadRestrictedFactor(self.restricted_factor));
        }
        for source in &self.sources {
            if !self.splits.contains_key(&source.group) {
                return Err(ConfigError::UnmappedGroup {
                    group: source.group.clone(),
                });
            }
        }
        Ok(())
    }

    /// Source used for a given record index (round-robin; single-material
    /// mode always uses the first).
    pub fn source_for(&self, record_index: usize) -> &CifSource {
        match self.mode {
            SamplingMode::SingleMaterial => &self.sources[0],
            _ => &self.sources[record_index % self.sources.len()],
        }
    }
}
