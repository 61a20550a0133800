//! Element symbol <-> atomic number mapping for Z = 1..=103.

pub const SYMBOLS: [&str; 103] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al",
    "Si", "P", "S", "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe",
    "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr",
    "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm",
    "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn",
    "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf",
    "Es", "Fm", "Md", "No", "Lr",
];

/// Atomic number for a bare element symbol ("Na"), case-sensitive on the
/// standard capitalization.
pub fn symbol_to_z(symbol: &str) -> Option<u8> {
    SYMBOLS
        .iter()
        .position(|&s| s == symbol)
        .map(|i| (i + 1) as u8)
}

/// Atomic number from a CIF site token: strips trailing digits, charge
/// signs, and site-label suffixes ("Na1+", "O2-", "Ca2", "Fe3+").
pub fn site_token_to_z(token: &str) -> Option<u8> {
    let core: String = token
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect();
    // Prefer the longest symbol prefix so "Na1" -> Na, "N1" -> N.
    for len in (1..=core.len().min(2)).rev() {
        let candidate = &core[..len];
        let normalized: String = candidate
            .chars()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    c.to_ascii_uppercase()
                } else {
                    c.to_ascii_lowercase()
                }
            })
            .collect();
        if let Some(z) = symbol_to_z(&normalized) {
            return Some(z);
        }
    }
    None
}

pub fn z_to_symbol(z: u8) -> Option<&'static str> {
    if (1..=103).contains(&z) {
        Some(SYMBOLS[z as usize - 1])
    } else {
        None
    }
}
