//! Dataset-generation orchestration behind the `exitwave` binary:
//! parameter sampling, batch simulation, cropping/normalization,
//! augmentation, and split partitioning.

pub mod augment;
pub mod config;
pub mod dataset;
pub mod partition;
pub mod record;
pub mod sampling;

pub use config::{DatasetConfig, Normalization, SamplingMode};
pub use record::DatasetRecord;
