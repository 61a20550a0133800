//! CODATA-2018 physical constants and the unit conversions used across the
//! crate. All other modules take their numbers from here.

/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Electron rest mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_7015e-31;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;

/// Electron rest energy m0 c^2, J.
pub const ELECTRON_REST_ENERGY: f64 =
    ELECTRON_MASS * SPEED_OF_LIGHT * SPEED_OF_LIGHT;

/// Coulomb constant times elementary charge, e / (4 pi eps0), in V m.
/// Equals 1.4399645e-9 V m = 14.399645 V Angstrom.
pub const COULOMB_E: f64 = ELEMENTARY_CHARGE
    / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY);

/// Bohr radius in Angstrom.
pub const BOHR_RADIUS_ANGSTROM: f64 = BOHR_RADIUS * 1e10;
/// e / (4 pi eps0) in V Angstrom.
pub const COULOMB_E_V_ANGSTROM: f64 = COULOMB_E * 1e10;

pub const ANGSTROM_PER_NM: f64 = 10.0;
pub const NM_PER_ANGSTROM: f64 = 0.1;
pub const VOLTS_PER_KILOVOLT: f64 = 1e3;
pub const NM_PER_MM: f64 = 1e6;
pub const NM_PER_PM: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_e_matches_handbook_value() {
        // e/(4 pi eps0) = 14.39964 V Angstrom
        assert!((COULOMB_E_V_ANGSTROM - 14.399645).abs() < 1e-4);
    }

    #[test]
    fn rest_energy_in_kev() {
        let kev = ELECTRON_REST_ENERGY / ELEMENTARY_CHARGE / 1e3;
        assert!((kev - 510.99895).abs() < 1e-3);
    }
}
