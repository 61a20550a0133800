//! Resumable, deterministic batch dataset generation.
//!
//! The output tree is a pure function of (CIF set, config, master seed):
//! every record draws from its own RNG stream, workers share no mutable
//! state, and files land via write-temp-rename so interrupted runs can
//! resume without partial artifacts.

use crate::config::{ConfigError, DatasetConfig};
use crate::partition::{audit_no_leakage, PartitionError};
use crate::record::{generate_record, RecordError};
use crate::sampling::sample_params;
use exitwave::io::{write_wavefunction_raw, IoError, WavefunctionMeta};
use exitwave::potential::KirklandTable;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Format(#[from] IoError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub index: usize,
    pub file: Option<String>,
    pub source_cif: String,
    pub group: String,
    pub split: String,
    /// Reason the record was discarded, if it was.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub seed: u64,
    pub records: usize,
    pub entries: Vec<ManifestEntry>,
}

fn record_file_name(index: usize) -> String {
    format!("record_{index:05}.ewf")
}

/// Atomically write `bytes` at `path` via a temp file in the same
/// directory.
fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn generate_one(
    table: &KirklandTable,
    config: &DatasetConfig,
    records_dir: &Path,
    index: usize,
) -> Result<ManifestEntry, DatasetError> {
    let source = config.source_for(index);
    let split = config.splits[&source.group].clone();
    let params = sample_params(config, index as u64);
    let file_name = record_file_name(index);
    let final_path = records_dir.join(&file_name);
    let sidecar = exitwave::io::sidecar_path(&final_path);

    let mut entry = ManifestEntry {
        index,
        file: Some(format!("records/{file_name}")),
        source_cif: source.path.display().to_string(),
        group: source.group.clone(),
        split: split.clone(),
        skipped: None,
    };

    // resume: a completed record has both its payload and sidecar
    if final_path.exists() && sidecar.exists() {
        return Ok(entry);
    }

    match generate_record(table, config, &params, &source.path, &source.group, &split) {
        Ok(record) => {
            // serialize the payload through a temp file, then the sidecar
            let tmp = records_dir.join(format!(".{file_name}.partial"));
            write_wavefunction_raw(&tmp, &record.values, record.pixel_nm)?;
            std::fs::rename(&tmp, &final_path)?;
            let mut provenance = serde_json::Map::new();
            provenance.insert("source_cif".into(), record.source_cif.clone().into());
            provenance.insert("group".into(), record.group.clone().into());
            provenance.insert("split".into(), record.split.clone().into());
            provenance.insert("record_index".into(), (index as u64).into());
            let meta = WavefunctionMeta {
                params: record.params,
                provenance,
            };
            atomic_write(&sidecar, serde_json::to_string_pretty(&meta)?.as_bytes())?;
        }
        Err(err @ (RecordError::Cif { .. } | RecordError::Block(_))) => {
            // unusable draw or unusable CIF: record why and move on
            entry.file = None;
            entry.skipped = Some(err.to_string());
        }
        Err(other) => return Err(DatasetError::Io(std::io::Error::other(other.to_string()))),
    }
    Ok(entry)
}

/// Generate (or resume) the whole dataset tree under `out_dir`.
pub fn run_dataset(
    config: &DatasetConfig,
    out_dir: &Path,
    threads: Option<usize>,
    progress: bool,
) -> Result<Manifest, DatasetError> {
    config.validate()?;
    let records_dir = out_dir.join("records");
    std::fs::create_dir_all(&records_dir)?;
    let table = KirklandTable::bundled();

    let run = || -> Result<Vec<ManifestEntry>, DatasetError> {
        (0..config.records)
            .into_par_iter()
            .map(|index| {
                let entry = generate_one(&table, config, &records_dir, index)?;
                if progress {
                    eprintln!("record {index}: {}", entry.skipped.as_deref().unwrap_or("ok"));
                }
                Ok(entry)
            })
            .collect()
    };
    let mut entries = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| DatasetError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    }?;
    entries.sort_by_key(|e| e.index);

    audit_no_leakage(
        entries
            .iter()
            .map(|e| (e.source_cif.as_str(), e.split.as_str())),
    )?;

    let manifest = Manifest {
        seed: config.seed,
        records: config.records,
        entries,
    };
    atomic_write(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(manifest)
}

/// Paths of every file a dataset run produces, for comparisons.
pub fn tree_files(out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files = vec![out_dir.join("manifest.json")];
    let records_dir = out_dir.join("records");
    if records_dir.is_dir() {
        for entry in std::fs::read_dir(&records_dir)? {
            files.push(entry?.path());
        }
    }
    files.sort();
    Ok(files)
}
