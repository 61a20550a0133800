//! Property-based invariants across the library surface.

use exitwave::crystal::{
    build_block, parse_cif, partition_slices, to_cif_string, CrystalStructure, SimParams, Site,
};
use exitwave::recon::{l2_normalize_pair, PhasePair};
use ndarray::Array2;
use proptest::prelude::*;

fn site_strategy() -> impl Strategy<Value = Site> {
    (
        1u8..=103,
        [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64],
        0.05..=1.0f64,
    )
        .prop_map(|(z, fractional, occupancy)| Site {
            z,
            fractional,
            occupancy,
        })
}

fn crystal_strategy() -> impl Strategy<Value = CrystalStructure> {
    (
        [0.3..1.2f64, 0.3..1.2f64, 0.3..1.2f64],
        [60.0..120.0f64, 60.0..120.0f64, 60.0..120.0f64],
        proptest::collection::vec(site_strategy(), 1..5),
    )
        .prop_map(|(cell_lengths_nm, cell_angles_deg, sites)| CrystalStructure {
            cell_lengths_nm,
            cell_angles_deg,
            sites,
        })
        .prop_filter("non-degenerate cell", |c| {
            // angle combination must close into a real cell
            let [a, b, g] = c.cell_angles_deg.map(|d: f64| d.to_radians());
            1.0 - a.cos().powi(2) - b.cos().powi(2) - g.cos().powi(2)
                + 2.0 * a.cos() * b.cos() * g.cos()
                > 0.01
        })
        .prop_filter("sites distinct", |c| {
            // the CIF parser dedups overlapping orbit positions; keep the
            // round-trip comparison meaningful
            for (i, a) in c.sites.iter().enumerate() {
                for b in c.sites.iter().skip(i + 1) {
                    let d: f64 = a
                        .fractional
                        .iter()
                        .zip(b.fractional.iter())
                        .zip(c.cell_lengths_nm.iter())
                        .map(|((x, y), l)| {
                            let mut f = (x - y).abs();
                            if f > 0.5 {
                                f = 1.0 - f;
                            }
                            (f * l).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt();
                    if d < 0.02 {
                        return false;
                    }
                }
            }
            true
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cif_round_trip_preserves_structure(crystal in crystal_strategy()) {
        let text = to_cif_string(&crystal);
        let back = parse_cif(&text).unwrap();
        prop_assert_eq!(back.sites.len(), crystal.sites.len());
        for (a, b) in crystal.cell_lengths_nm.iter().zip(back.cell_lengths_nm.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in crystal.cell_angles_deg.iter().zip(back.cell_angles_deg.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in crystal.sites.iter().zip(back.sites.iter()) {
            prop_assert_eq!(a.z, b.z);
            for (x, y) in a.fractional.iter().zip(b.fractional.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((a.occupancy - b.occupancy).abs() < 1e-12);
        }
    }

    #[test]
    fn slice_partition_conserves_atoms(
        seed in 0u64..1000,
        dz in 0.05..0.5f64,
        depth in 4.0..12.0f64,
    ) {
        let crystal = CrystalStructure {
            cell_lengths_nm: [0.4, 0.4, 0.4],
            cell_angles_deg: [90.0, 90.0, 90.0],
            sites: vec![Site { z: 14, fractional: [0.0, 0.0, 0.0], occupancy: 1.0 }],
        };
        let params = SimParams {
            voltage_kv: 300.0,
            depth_nm: depth,
            width_nm: 6.0,
            zone_axis: [0, 0, 1],
            tilt_deg: [0.0, 0.0],
            kirkland_n: 3,
            seed,
        };
        let block = build_block(&crystal, &params).unwrap();
        prop_assert!(block.atoms.len() >= 1000, "expected a dense block, got {}", block.atoms.len());
        let stack = partition_slices(&block, dz).unwrap();
        let total: usize = stack.slices.iter().map(|s| s.len()).sum();
        prop_assert_eq!(total, block.atoms.len());
        // each atom landed in the slice covering its z
        for (i, slice) in stack.slices.iter().enumerate() {
            let lo = i as f64 * dz - block.pad_z_nm;
            let hi = lo + dz;
            for atom in slice {
                prop_assert!(atom.position[2] >= lo - 1e-9 && atom.position[2] < hi + 1e-9);
            }
        }
    }

    #[test]
    fn normalization_lands_on_unit_circle(
        values in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 16)
    ) {
        prop_assume!(values.iter().all(|(c, s)| (c * c + s * s).sqrt() > 1e-6));
        let cos = Array2::from_shape_vec((4, 4), values.iter().map(|v| v.0).collect()).unwrap();
        let sin = Array2::from_shape_vec((4, 4), values.iter().map(|v| v.1).collect()).unwrap();
        let pair = PhasePair { cos_component: cos, sin_component: sin };
        let out = l2_normalize_pair(&pair).unwrap();
        for (c, s) in out.cos_component.iter().zip(out.sin_component.iter()) {
            prop_assert!((c * c + s * s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn quadratic_defocus_series_is_monotone(
        df_min in -50.0..50.0f64,
        span in 0.1..200.0f64,
        count in 2usize..20,
    ) {
        let defoci = exitwave::holography::quadratic_defocus_series(
            df_min, df_min + span, count,
        ).unwrap();
        prop_assert_eq!(defoci.len(), count);
        prop_assert!(defoci.windows(2).all(|w| w[1] > w[0]));
        prop_assert!((defoci[0] - df_min).abs() < 1e-9);
        prop_assert!((defoci[count - 1] - (df_min + span)).abs() < 1e-9);
    }
}
