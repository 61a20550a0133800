//! Exit-wavefunction simulation and phase-retrieval toolkit.
//!
//! The pipeline: CIF ingestion ([`crystal`]) -> projected atomic
//! potentials ([`potential`]) -> multislice propagation ([`multislice`])
//! -> contrast-transfer-function optics ([`optics`]) -> hologram and
//! focal-series synthesis/reconstruction ([`holography`]), plus the
//! framework-free training mathematics in [`recon`].

pub mod constants;
pub mod crystal;
pub mod fft;
pub mod grid;
pub mod holography;
pub mod io;
pub mod multislice;
pub mod optics;
pub mod potential;
pub mod recon;

pub use grid::{ComplexField2D, GridSpec, PotentialGrid};
