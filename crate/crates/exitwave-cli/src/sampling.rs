//! Deterministic per-record parameter sampling.
//!
//! Each record draws from its own counted RNG stream (master seed +
//! record index), so generation order and thread count never change the
//! sampled parameters.

use crate::config::{DatasetConfig, SamplingMode};
use exitwave::crystal::SimParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const VOLTAGES_KV: [f64; 3] = [80.0, 200.0, 300.0];
pub const DEPTH_RANGE_NM: (f64, f64) = (5.0, 100.0);
pub const WIDTH_RANGE_NM: (f64, f64) = (5.0, 10.0);
pub const TILT_SIGMA_DEG: f64 = 0.1;

/// RNG for one record's stream.
pub fn record_rng(master_seed: u64, record_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(record_index);
    rng
}

/// Upper bounds for (depth, width) under the config's sampling mode.
pub fn mode_bounds(config: &DatasetConfig) -> (f64, f64) {
    match config.mode {
        SamplingMode::Restricted => (
            DEPTH_RANGE_NM.0 + (DEPTH_RANGE_NM.1 - DEPTH_RANGE_NM.0) * config.restricted_factor,
            WIDTH_RANGE_NM.0 + (WIDTH_RANGE_NM.1 - WIDTH_RANGE_NM.0) * config.restricted_factor,
        ),
        _ => (DEPTH_RANGE_NM.1, WIDTH_RANGE_NM.1),
    }
}

/// Draw the simulation hyperparameters for one record.
pub fn sample_params(config: &DatasetConfig, record_index: u64) -> SimParams {
    let mut rng = record_rng(config.seed, record_index);
    let (depth_hi, width_hi) = mode_bounds(config);

    let voltage_kv = VOLTAGES_KV[rng.gen_range(0..VOLTAGES_KV.len())];
    let depth_nm = rng.gen_range(DEPTH_RANGE_NM.0..depth_hi);
    let width_nm = rng.gen_range(WIDTH_RANGE_NM.0..width_hi);
    let zone_axis = loop {
        let axis = [
            rng.gen_range(0..3_i32),
            rng.gen_range(0..3_i32),
            rng.gen_range(0..3_i32),
        ];
        if axis != [0, 0, 0] {
            break axis;
        }
    };
    let tilt = Normal::new(0.0, TILT_SIGMA_DEG).expect("positive sigma");
    let tilt_deg = [tilt.sample(&mut rng), tilt.sample(&mut rng)];
    let kirkland_n = if rng.gen_bool(0.5) { 1 } else { 3 };
    let seed = rng.gen::<u64>();

    SimParams {
        voltage_kv,
        depth_nm,
        width_nm,
        zone_axis,
        tilt_deg,
        kirkland_n,
        seed,
    }
}
