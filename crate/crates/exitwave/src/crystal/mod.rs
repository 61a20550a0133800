//! Crystal ingestion: CIF parsing, oriented specimen-block construction,
//! and slice partitioning.

pub mod cif;
pub mod elements;

pub use cif::{parse_cif, to_cif_string, CifError, SymmetryOp};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default in-plane vacuum margin, nm.
pub const DEFAULT_PAD_XY_NM: f64 = 0.8;
/// Default axial vacuum margin, nm.
pub const DEFAULT_PAD_Z_NM: f64 = 0.3;

/// One crystallographic site in fractional coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub z: u8,
    pub fractional: [f64; 3],
    pub occupancy: f64,
}

/// Unit cell plus site list, lengths in nm, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalStructure {
    pub cell_lengths_nm: [f64; 3],
    pub cell_angles_deg: [f64; 3],
    pub sites: Vec<Site>,
}

/// One atom in cartesian block coordinates, nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: u8,
    pub position: [f64; 3],
}

/// Oriented, tilted, cropped simulation block. Atom positions live in
/// [0, extent]; the vacuum pads are margins added around that box when the
/// block is sampled onto a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecimenBlock {
    pub atoms: Vec<Atom>,
    /// (w_x, w_y, depth), nm. Depth is along the optical axis z.
    pub extent: [f64; 3],
    pub pad_xy_nm: f64,
    pub pad_z_nm: f64,
    pub zone_axis: [i32; 3],
    pub tilt_deg: [f64; 2],
}

/// Atoms partitioned into slices along z. Slice i covers
/// z in [i*dz - pad_z, (i+1)*dz - pad_z) of block coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceStack {
    pub slices: Vec<Vec<Atom>>,
    pub dz_nm: f64,
}

/// One draw of the simulation hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub voltage_kv: f64,
    pub depth_nm: f64,
    pub width_nm: f64,
    pub zone_axis: [i32; 3],
    pub tilt_deg: [f64; 2],
    pub kirkland_n: usize,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum BlockError {
    #[error("zone axis (0,0,0) is degenerate")]
    DegenerateZoneAxis,
    #[error("no atoms remain after cropping to the block extent")]
    EmptyBlock,
    #[error("slice thickness must be positive, got {0}")]
    NonPositiveSliceThickness(f64),
}

/// Lattice vectors as matrix columns (row-major [i][j]: component i of
/// vector j), standard orientation: a along x, b in the xy plane.
pub fn cell_matrix(lengths_nm: [f64; 3], angles_deg: [f64; 3]) -> [[f64; 3]; 3] {
    let [a, b, c] = lengths_nm;
    let [alpha, beta, gamma] = angles_deg.map(|d| d.to_radians());
    let (ca, cb, cg, sg) = (alpha.cos(), beta.cos(), gamma.cos(), gamma.sin());
    let v = (1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg)
        .max(0.0)
        .sqrt();
    [
        [a, b * cg, c * cb],
        [0.0, b * sg, c * (ca - cb * cg) / sg],
        [0.0, 0.0, c * v / sg],
    ]
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, row) in b.iter().enumerate() {
                out[i][j] += a[i][k] * row[j];
            }
        }
    }
    out
}

fn mat_inv(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            out[j][i] = sign * minor * inv_det;
        }
    }
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Rotation (row-major, applied as R * v) aligning the real-space lattice
/// vector h a + k b + l c with +z. The in-plane azimuth is fixed by
/// projecting the a lattice vector (or b, when a is axial) onto the plane.
pub fn zone_axis_rotation(
    crystal: &CrystalStructure,
    zone: [i32; 3],
) -> Result<[[f64; 3]; 3], BlockError> {
    if zone == [0, 0, 0] {
        return Err(BlockError::DegenerateZoneAxis);
    }
    let cell = cell_matrix(crystal.cell_lengths_nm, crystal.cell_angles_deg);
    let d = mat_vec(&cell, [zone[0] as f64, zone[1] as f64, zone[2] as f64]);
    let z_hat = normalize(d);
    let a_vec = [cell[0][0], cell[1][0], cell[2][0]];
    let b_vec = [cell[0][1], cell[1][1], cell[2][1]];
    let mut u = in_plane_part(a_vec, z_hat);
    if norm(u) < 1e-9 * norm(a_vec) {
        u = in_plane_part(b_vec, z_hat);
    }
    let x_hat = normalize(u);
    let y_hat = cross(z_hat, x_hat);
    Ok([x_hat, y_hat, z_hat])
}

fn in_plane_part(v: [f64; 3], z_hat: [f64; 3]) -> [f64; 3] {
    let p = dot(v, z_hat);
    [v[0] - p * z_hat[0], v[1] - p * z_hat[1], v[2] - p * z_hat[2]]
}

fn tilt_rotation(tilt_deg: [f64; 2]) -> [[f64; 3]; 3] {
    let (tx, ty) = (tilt_deg[0].to_radians(), tilt_deg[1].to_radians());
    let rx = [
        [1.0, 0.0, 0.0],
        [0.0, tx.cos(), -tx.sin()],
        [0.0, tx.sin(), tx.cos()],
    ];
    let ry = [
        [ty.cos(), 0.0, ty.sin()],
        [0.0, 1.0, 0.0],
        [-ty.sin(), 0.0, ty.cos()],
    ];
    mat_mul(&rx, &ry)
}

/// Orient the crystal along the requested zone axis, tile it to fill
/// width x width x depth, crop, and sample partial occupancies.
///
/// Tilts are applied after zone-axis alignment, before the crop, so the
/// block invariant (all atoms inside the extent) holds exactly.
pub fn build_block(
    crystal: &CrystalStructure,
    params: &SimParams,
) -> Result<SpecimenBlock, BlockError> {
    build_block_with_pads(crystal, params, DEFAULT_PAD_XY_NM, DEFAULT_PAD_Z_NM)
}

pub fn build_block_with_pads(
    crystal: &CrystalStructure,
    params: &SimParams,
    pad_xy_nm: f64,
    pad_z_nm: f64,
) -> Result<SpecimenBlock, BlockError> {
    let align = zone_axis_rotation(crystal, params.zone_axis)?;
    let rot = mat_mul(&tilt_rotation(params.tilt_deg), &align);
    let cell = cell_matrix(crystal.cell_lengths_nm, crystal.cell_angles_deg);
    let rot_cell = mat_mul(&rot, &cell);
    let inv_rot_cell = mat_inv(&rot_cell);

    let extent = [params.width_nm, params.width_nm, params.depth_nm];
    // lattice-index bounds from the box corners, with one cell of margin
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for cx in 0..2 {
        for cy in 0..2 {
            for cz in 0..2 {
                let corner = [
                    cx as f64 * extent[0],
                    cy as f64 * extent[1],
                    cz as f64 * extent[2],
                ];
                let s = mat_vec(&inv_rot_cell, corner);
                for i in 0..3 {
                    lo[i] = lo[i].min(s[i].floor() as i64 - 1);
                    hi[i] = hi[i].max(s[i].ceil() as i64 + 1);
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut atoms = Vec::new();
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                for site in &crystal.sites {
                    let frac = [
                        site.fractional[0] + i as f64,
                        site.fractional[1] + j as f64,
                        site.fractional[2] + k as f64,
                    ];
                    let p = mat_vec(&rot_cell, frac);
                    if p[0] < 0.0
                        || p[0] >= extent[0]
                        || p[1] < 0.0
                        || p[1] >= extent[1]
                        || p[2] < 0.0
                        || p[2] >= extent[2]
                    {
                        continue;
                    }
                    if site.occupancy < 1.0 && rng.gen::<f64>() >= site.occupancy {
                        continue;
                    }
                    atoms.push(Atom {
                        z: site.z,
                        position: p,
                    });
                }
            }
        }
    }
    if atoms.is_empty() {
        return Err(BlockError::EmptyBlock);
    }
    Ok(SpecimenBlock {
        atoms,
        extent,
        pad_xy_nm,
        pad_z_nm,
        zone_axis: params.zone_axis,
        tilt_deg: params.tilt_deg,
    })
}

impl SpecimenBlock {
    /// Total thickness along z including both vacuum pads, nm.
    pub fn padded_depth_nm(&self) -> f64 {
        self.extent[2] + 2.0 * self.pad_z_nm
    }

    /// In-plane field width including both vacuum pads, nm.
    pub fn padded_width_nm(&self) -> f64 {
        self.extent[0] + 2.0 * self.pad_xy_nm
    }

    /// JSON debug dump of species, positions, and extents.
    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("block serializes")
    }
}

/// Assign each atom to slice floor((z + pad_z) / dz); slices cover the full
/// padded depth, and slices without atoms stay empty (vacuum).
pub fn partition_slices(block: &SpecimenBlock, dz_nm: f64) -> Result<SliceStack, BlockError> {
    if dz_nm <= 0.0 {
        return Err(BlockError::NonPositiveSliceThickness(dz_nm));
    }
    let depth = block.padded_depth_nm();
    let count = (depth / dz_nm).ceil().max(1.0) as usize;
    let mut slices = vec![Vec::new(); count];
    for atom in &block.atoms {
        let idx = (((atom.position[2] + block.pad_z_nm) / dz_nm).floor() as usize)
            .min(count - 1);
        slices[idx].push(*atom);
    }
    Ok(SliceStack {
        slices,
        dz_nm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_cubic(a_nm: f64) -> CrystalStructure {
        CrystalStructure {
            cell_lengths_nm: [a_nm; 3],
            cell_angles_deg: [90.0; 3],
            sites: vec![Site {
                z: 14,
                fractional: [0.0, 0.0, 0.0],
                occupancy: 1.0,
            }],
        }
    }

    fn params(zone: [i32; 3], width: f64, depth: f64) -> SimParams {
        SimParams {
            voltage_kv: 300.0,
            depth_nm: depth,
            width_nm: width,
            zone_axis: zone,
            tilt_deg: [0.0, 0.0],
            kirkland_n: 3,
            seed: 7,
        }
    }

    #[test]
    fn cubic_block_has_expected_atom_count() {
        let crystal = simple_cubic(0.5);
        let block = build_block(&crystal, &params([0, 0, 1], 5.0, 5.0)).unwrap();
        // 10 x 10 x 10 lattice sites in [0, 5)^3
        assert_eq!(block.atoms.len(), 1000);
    }

    #[test]
    fn degenerate_zone_axis_rejected() {
        let crystal = simple_cubic(0.5);
        assert_eq!(
            build_block(&crystal, &params([0, 0, 0], 5.0, 5.0)).unwrap_err(),
            BlockError::DegenerateZoneAxis
        );
    }

    #[test]
    fn zero_tilt_matches_untilted() {
        let crystal = simple_cubic(0.43);
        let p = params([1, 1, 0], 4.0, 4.0);
        let mut p2 = p.clone();
        p2.tilt_deg = [0.0, 0.0];
        let b1 = build_block(&crystal, &p).unwrap();
        let b2 = build_block(&crystal, &p2).unwrap();
        assert_eq!(b1.atoms, b2.atoms);
    }

    #[test]
    fn zone_axis_lands_on_z() {
        let crystal = CrystalStructure {
            cell_lengths_nm: [0.4, 0.5, 0.6],
            cell_angles_deg: [80.0, 95.0, 103.0],
            sites: vec![Site {
                z: 6,
                fractional: [0.1, 0.2, 0.3],
                occupancy: 1.0,
            }],
        };
        for zone in [[0, 0, 1], [1, 0, 0], [1, 1, 0], [2, 1, 1], [0, 2, 1]] {
            let rot = zone_axis_rotation(&crystal, zone).unwrap();
            let cell = cell_matrix(crystal.cell_lengths_nm, crystal.cell_angles_deg);
            let d = mat_vec(&cell, [zone[0] as f64, zone[1] as f64, zone[2] as f64]);
            let rotated = mat_vec(&rot, d);
            let axial = rotated[2];
            let planar = (rotated[0].powi(2) + rotated[1].powi(2)).sqrt();
            assert!(planar / axial < 1e-9, "zone {zone:?} off-axis");
        }
    }

    #[test]
    fn rotation_preserves_distances() {
        let crystal = CrystalStructure {
            cell_lengths_nm: [0.42, 0.42, 0.55],
            cell_angles_deg: [90.0, 90.0, 120.0],
            sites: vec![
                Site {
                    z: 31,
                    fractional: [0.0, 0.0, 0.0],
                    occupancy: 1.0,
                },
                Site {
                    z: 7,
                    fractional: [1.0 / 3.0, 2.0 / 3.0, 0.5],
                    occupancy: 1.0,
                },
            ],
        };
        let rot = zone_axis_rotation(&crystal, [1, 1, 2]).unwrap();
        let cell = cell_matrix(crystal.cell_lengths_nm, crystal.cell_angles_deg);
        let pts = [[0.1, 0.2, 0.3], [0.7, 0.4, 0.9], [1.3, 0.1, 0.2]];
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let pi = mat_vec(&cell, pts[i]);
                let pj = mat_vec(&cell, pts[j]);
                let before = norm([pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]]);
                let ri = mat_vec(&rot, pi);
                let rj = mat_vec(&rot, pj);
                let after = norm([ri[0] - rj[0], ri[1] - rj[1], ri[2] - rj[2]]);
                assert!((before - after).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn slice_binning_and_count() {
        let block = SpecimenBlock {
            atoms: vec![
                Atom {
                    z: 6,
                    position: [0.0, 0.0, 0.1],
                },
                Atom {
                    z: 6,
                    position: [0.0, 0.0, 0.4],
                },
            ],
            extent: [1.0, 1.0, 0.5],
            pad_xy_nm: 0.0,
            pad_z_nm: 0.0,
            zone_axis: [0, 0, 1],
            tilt_deg: [0.0, 0.0],
        };
        let stack = partition_slices(&block, 0.25).unwrap();
        assert_eq!(stack.slices.len(), 2);
        assert_eq!(stack.slices[0].len(), 1);
        assert_eq!(stack.slices[1].len(), 1);
    }

    #[test]
    fn padded_slice_count() {
        let block = SpecimenBlock {
            atoms: vec![Atom {
                z: 6,
                position: [0.0, 0.0, 0.0],
            }],
            extent: [1.0, 1.0, 5.0],
            pad_xy_nm: 0.8,
            pad_z_nm: 0.3,
            zone_axis: [0, 0, 1],
            tilt_deg: [0.0, 0.0],
        };
        let stack = partition_slices(&block, 0.2).unwrap();
        assert_eq!(stack.slices.len(), 28);
    }

    #[test]
    fn non_positive_dz_rejected() {
        let crystal = simple_cubic(0.5);
        let block = build_block(&crystal, &params([0, 0, 1], 3.0, 3.0)).unwrap();
        assert!(matches!(
            partition_slices(&block, 0.0),
            Err(BlockError::NonPositiveSliceThickness(_))
        ));
    }

    #[test]
    fn occupancy_sampling_is_seeded() {
        let mut crystal = simple_cubic(0.5);
        crystal.sites[0].occupancy = 0.5;
        let p = params([0, 0, 1], 5.0, 5.0);
        let b1 = build_block(&crystal, &p).unwrap();
        let b2 = build_block(&crystal, &p).unwrap();
        assert_eq!(b1.atoms, b2.atoms);
        let n = b1.atoms.len();
        assert!(n > 300 && n < 700, "got {n} of 1000 half-occupied sites");
    }
}
