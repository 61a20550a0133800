//! `exitwave` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/runtime error.

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use exitwave::crystal::{build_block, parse_cif, SimParams};
use exitwave::holography::{
    generate_focal_series, quadratic_defocus_series, reconstruct_focal_series,
    reconstruct_sideband, synthesize_hologram, HologramParams,
};
use exitwave::io;
use exitwave::multislice::{simulate_exit_wave, SimulationConfig};
use exitwave::optics::{CtfParams, CtfParamsJson};
use exitwave::potential::{KirklandTable, PhysicalSetup};
use exitwave::recon::{random_phase_baseline_moments, random_phase_baseline_monte_carlo};
use exitwave::GridSpec;
use exitwave_cli::dataset::run_dataset;
use exitwave_cli::DatasetConfig;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "exitwave", version, about = "Exit-wavefunction simulation and phase retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one exit wave from a CIF file.
    Simulate {
        /// Input crystal structure (CIF).
        cif: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Full SimParams as JSON; overrides the individual flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 300.0)]
        voltage: f64,
        /// Specimen depth, nm.
        #[arg(long, default_value_t = 10.0)]
        depth: f64,
        /// Specimen width, nm.
        #[arg(long, default_value_t = 5.0)]
        width: f64,
        /// Zone axis as h,k,l.
        #[arg(long, default_value = "0,0,1")]
        zone: String,
        /// Crystal tilt about x,y in degrees.
        #[arg(long, default_value = "0,0")]
        tilt: String,
        #[arg(long, default_value_t = 3)]
        kirkland_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulation grid edge (power of two).
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Slice thickness, nm.
        #[arg(long, default_value_t = 0.2)]
        dz: f64,
    },
    /// Batch dataset generation from a JSON config (resumable).
    Dataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Suppress per-record progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Synthesize an off-axis hologram from a wavefunction file.
    Hologram {
        /// Input wavefunction (EWF1).
        input: PathBuf,
        /// Output TIFF; a JSON sidecar <out>.json records carrier and mu.
        #[arg(long)]
        out: PathBuf,
        /// Carrier frequency in integer reciprocal bins, as jx,jy.
        #[arg(long, default_value = "16,0")]
        carrier_bins: String,
        /// Combined fringe contrast.
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
    },
    /// Generate a focal series from a wavefunction file.
    FocalSeries {
        /// Input wavefunction (EWF1).
        input: PathBuf,
        /// Output directory (TIFFs + series.json).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        df_min: f64,
        #[arg(long, default_value_t = 100.0)]
        df_max: f64,
        #[arg(long, default_value_t = 14)]
        count: usize,
        /// CTF parameters as JSON; defaults to an aberration-free CTF.
        #[arg(long)]
        ctf: Option<PathBuf>,
        #[arg(long, default_value_t = 300.0)]
        voltage: f64,
    },
    /// Recover a wavefunction from a hologram or focal series.
    Reconstruct {
        #[arg(long, value_enum)]
        mode: ReconstructMode,
        /// Hologram TIFF (sideband) or series directory (focal).
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        /// Sideband crop radius, 1/nm (default |q_c|/3).
        #[arg(long)]
        crop_radius: Option<f64>,
    },
    /// Print the random-phase error baseline moments.
    Baseline {
        #[arg(long, default_value_t = 10_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReconstructMode {
    Sideband,
    Focal,
}

/// Sidecar for hologram TIFFs so reconstruction knows the geometry.
#[derive(Serialize, Deserialize)]
struct HologramMeta {
    q_c: [f64; 2],
    mu: f64,
    pixel_nm: f64,
}

fn parse_pair<T: std::str::FromStr>(text: &str, what: &str) -> Result<[T; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        bail!("{what} must be two comma-separated values, got {text:?}");
    }
    let a = parts[0]
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("bad {what} component {:?}", parts[0]))?;
    let b = parts[1]
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("bad {what} component {:?}", parts[1]))?;
    Ok([a, b])
}

fn parse_triple(text: &str) -> Result<[i32; 3]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("zone axis must be h,k,l, got {text:?}");
    }
    let mut out = [0i32; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("bad zone axis component {part:?}"))?;
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            cif,
            out,
            config,
            voltage,
            depth,
            width,
            zone,
            tilt,
            kirkland_n,
            seed,
            grid,
            dz,
        } => {
            let params = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    serde_json::from_str::<SimParams>(&text)
                        .with_context(|| format!("bad SimParams in {}", path.display()))?
                }
                None => SimParams {
                    voltage_kv: voltage,
                    depth_nm: depth,
                    width_nm: width,
                    zone_axis: parse_triple(&zone)?,
                    tilt_deg: parse_pair(&tilt, "tilt")?,
                    kirkland_n,
                    seed,
                },
            };
            let text = std::fs::read_to_string(&cif)
                .with_context(|| format!("cannot read {}", cif.display()))?;
            let crystal =
                parse_cif(&text).with_context(|| format!("cannot parse {}", cif.display()))?;
            let block = build_block(&crystal, &params)?;
            let setup = PhysicalSetup::new(params.voltage_kv)?;
            let table = KirklandTable::bundled();
            let sim_config = SimulationConfig {
                grid_n: grid,
                dz_nm: dz,
                ..SimulationConfig::default()
            };
            let psi = simulate_exit_wave(&block, &setup, &table, params.kirkland_n, &sim_config)?;
            io::write_wavefunction(&out, &psi)?;
            let mut provenance = serde_json::Map::new();
            provenance.insert("source_cif".into(), cif.display().to_string().into());
            io::write_sidecar(&out, &io::WavefunctionMeta { params, provenance })?;
            eprintln!("wrote {}", out.display());
        }
        Command::Dataset {
            config,
            out,
            threads,
            quiet,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("cannot read {}", config.display()))?;
            let config: DatasetConfig = serde_json::from_str(&text)
                .with_context(|| "bad dataset config JSON")?;
            let manifest = run_dataset(&config, &out, threads, !quiet)?;
            let generated = manifest.entries.iter().filter(|e| e.skipped.is_none()).count();
            let skipped = manifest.entries.len() - generated;
            eprintln!("{generated} records generated, {skipped} skipped");
        }
        Command::Hologram {
            input,
            out,
            carrier_bins,
            mu,
        } => {
            let psi = io::read_wavefunction(&input)
                .with_context(|| format!("cannot read {}", input.display()))?;
            let [jx, jy]: [i64; 2] = parse_pair(&carrier_bins, "carrier bins")?;
            let q_c = [jx as f64 * psi.grid.dqx(), jy as f64 * psi.grid.dqy()];
            let mut params = HologramParams::with_unit_contrast(q_c);
            params.mtf = mu;
            let hologram = synthesize_hologram(&psi, &params)?;
            io::write_f32_tiff(&out, &hologram)?;
            let meta = HologramMeta {
                q_c,
                mu,
                pixel_nm: psi.grid.pixel_nm,
            };
            std::fs::write(
                hologram_meta_path(&out),
                serde_json::to_string_pretty(&meta)?,
            )?;
            eprintln!("wrote {}", out.display());
        }
        Command::FocalSeries {
            input,
            out,
            df_min,
            df_max,
            count,
            ctf,
            voltage,
        } => {
            let psi = io::read_wavefunction(&input)
                .with_context(|| format!("cannot read {}", input.display()))?;
            let ctf = match ctf {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    serde_json::from_str::<CtfParamsJson>(&text)?.to_params()?
                }
                None => CtfParams::identity(PhysicalSetup::new(voltage)?),
            };
            let defoci = quadratic_defocus_series(df_min, df_max, count)?;
            let series = generate_focal_series(&psi, &ctf, &defoci)?;
            io::write_focal_series(&out, &series)?;
            eprintln!("wrote {} images to {}", count, out.display());
        }
        Command::Reconstruct {
            mode,
            input,
            out,
            iterations,
            crop_radius,
        } => match mode {
            ReconstructMode::Sideband => {
                let hologram = io::read_f32_tiff(&input)
                    .with_context(|| format!("cannot read {}", input.display()))?;
                let meta_path = hologram_meta_path(&input);
                let meta: HologramMeta = serde_json::from_str(
                    &std::fs::read_to_string(&meta_path)
                        .with_context(|| format!("cannot read {}", meta_path.display()))?,
                )?;
                let (ny, nx) = hologram.dim();
                let grid = GridSpec::new(nx, ny, meta.pixel_nm)?;
                let psi = reconstruct_sideband(&hologram, grid, meta.q_c, crop_radius, meta.mu)?;
                io::write_wavefunction(&out, &psi)?;
                eprintln!("wrote {}", out.display());
            }
            ReconstructMode::Focal => {
                let series = io::read_focal_series(&input)
                    .with_context(|| format!("cannot read series in {}", input.display()))?;
                let recon = reconstruct_focal_series(&series, iterations)?;
                io::write_wavefunction(&out, &recon.wave)?;
                eprintln!(
                    "wrote {} after {} sweeps (residual {:.3e})",
                    out.display(),
                    recon.sweeps_run,
                    recon.residuals.last().copied().unwrap_or(0.0)
                );
            }
        },
        Command::Baseline { samples, seed } => {
            let analytic = random_phase_baseline_moments();
            let mc = random_phase_baseline_monte_carlo(samples, seed);
            println!(
                "analytic mean={} mean_square={} std={}",
                analytic.mean, analytic.mean_square, analytic.std
            );
            println!(
                "monte_carlo mean={} mean_square={} std={} samples={samples} seed={seed}",
                mc.mean, mc.mean_square, mc.std
            );
        }
    }
    Ok(())
}

fn hologram_meta_path(tiff_path: &std::path::Path) -> PathBuf {
    let mut name = tiff_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".json");
    tiff_path.with_file_name(name)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
