//! Pragmatic CIF subset parser: cell parameters, one atom-site loop, and
//! an optional symmetry-operator loop. Dictionaries and multi-block files
//! are rejected.

use super::elements::{site_token_to_z, z_to_symbol};
use super::{cell_matrix, CrystalStructure, Site};
use thiserror::Error;

/// Sites closer than this after symmetry expansion collapse to one, nm.
pub const DEDUP_TOLERANCE_NM: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum CifError {
    #[error("missing cell parameter '{0}'")]
    MissingCellParameter(String),
    #[error("line {line}: malformed loop near '{token}'")]
    MalformedLoop { line: usize, token: String },
    #[error("line {line}: unknown element symbol '{symbol}'")]
    UnknownElementSymbol { symbol: String, line: usize },
    #[error("line {line}: cannot parse '{token}' as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: bad symmetry operator '{op}'")]
    BadSymmetryOperator { line: usize, op: String },
    #[error("multi-block CIF files are not supported (second data_ block at line {line})")]
    MultipleDataBlocks { line: usize },
    #[error("no atom sites found")]
    NoAtomSites,
    #[error("cell parameter '{name}' out of range: {value}")]
    CellParameterOutOfRange { name: String, value: f64 },
}

/// One symmetry operator: frac' = coeffs * frac + shift, row-major 3x3.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOp {
    pub coeffs: [[f64; 3]; 3],
    pub shift: [f64; 3],
}

impl SymmetryOp {
    pub fn identity() -> Self {
        Self {
            coeffs: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            shift: [0.0; 3],
        }
    }

    pub fn apply(&self, frac: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.shift[i];
            for j in 0..3 {
                out[i] += self.coeffs[i][j] * frac[j];
            }
        }
        out
    }

    /// Parse "x,1/2+y,-z" style operator strings.
    pub fn parse(text: &str, line: usize) -> Result<Self, CifError> {
        let bad = || CifError::BadSymmetryOperator {
            line,
            op: text.to_string(),
        };
        let cleaned = text.trim_matches(|c| c == '\'' || c == '"').trim();
        let parts: Vec<&str> = cleaned.split(',').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut op = SymmetryOp {
            coeffs: [[0.0; 3]; 3],
            shift: [0.0; 3],
        };
        for (row, part) in parts.iter().enumerate() {
            parse_symmetry_component(part, row, &mut op).ok_or_else(bad)?;
        }
        Ok(op)
    }
}

/// Parse one coordinate expression ("-x+1/2", "y-x", "0.25+z") into a row
/// of the operator. Returns None on malformed input.
fn parse_symmetry_component(expr: &str, row: usize, op: &mut SymmetryOp) -> Option<()> {
    let chars: Vec<char> = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let mut i = 0;
    let mut any = false;
    while i < chars.len() {
        let mut sign = 1.0;
        while i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
            if chars[i] == '-' {
                sign = -sign;
            }
            i += 1;
        }
        if i >= chars.len() {
            return None;
        }
        // numeric part, possibly a fraction, possibly a coefficient
        let mut num: Option<f64> = None;
        if chars[i].is_ascii_digit() || chars[i] == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let mut value: f64 = chars[start..i].iter().collect::<String>().parse().ok()?;
            if i < chars.len() && chars[i] == '/' {
                i += 1;
                let dstart = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let denom: f64 = chars[dstart..i].iter().collect::<String>().parse().ok()?;
                if denom == 0.0 {
                    return None;
                }
                value /= denom;
            }
            num = Some(value);
            if i < chars.len() && chars[i] == '*' {
                i += 1;
            }
        }
        if i < chars.len() && matches!(chars[i], 'x' | 'y' | 'z' | 'X' | 'Y' | 'Z') {
            let col = match chars[i].to_ascii_lowercase() {
                'x' => 0,
                'y' => 1,
                _ => 2,
            };
            op.coeffs[row][col] += sign * num.unwrap_or(1.0);
            i += 1;
        } else if let Some(value) = num {
            op.shift[row] += sign * value;
        } else {
            return None;
        }
        any = true;
    }
    if any {
        Some(())
    } else {
        None
    }
}

/// Numeric CIF value, stripping a trailing uncertainty like "5.64(2)".
fn parse_cif_number(token: &str, line: usize) -> Result<f64, CifError> {
    let core = token.split('(').next().unwrap_or(token);
    core.trim().parse().map_err(|_| CifError::BadNumber {
        line,
        token: token.to_string(),
    })
}

/// Split a CIF data line into tokens, honoring single/double quotes.
fn tokenize(line: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '\'' || c == '"' {
            let quote = c;
            chars.next();
            let mut tok = String::new();
            for ch in chars.by_ref() {
                if ch == quote {
                    break;
                }
                tok.push(ch);
            }
            tokens.push(tok);
        } else if c == '#' {
            break;
        } else {
            let mut tok = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
            tokens.push(tok);
        }
    }
    tokens
}

struct Loop {
    tags: Vec<String>,
    rows: Vec<Vec<String>>,
    start_line: usize,
}

/// Parse CIF text into a crystal structure, applying symmetry operators
/// when present and deduplicating equivalent sites.
pub fn parse_cif(text: &str) -> Result<CrystalStructure, CifError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut items: Vec<(String, String, usize)> = Vec::new();
    let mut loops: Vec<Loop> = Vec::new();
    let mut data_blocks = 0usize;

    let mut i = 0;
    while i < lines.len() {
        let line_no = i + 1;
        let raw = lines[i];
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            i += 1;
            continue;
        }
        if trimmed.to_ascii_lowercase().starts_with("data_") {
            data_blocks += 1;
            if data_blocks > 1 {
                return Err(CifError::MultipleDataBlocks { line: line_no });
            }
            i += 1;
            continue;
        }
        if trimmed.eq_ignore_ascii_case("loop_") {
            let start_line = line_no;
            i += 1;
            let mut tags = Vec::new();
            while i < lines.len() {
                let t = lines[i].trim();
                if t.starts_with('_') {
                    tags.push(
                        t.split_whitespace().next().unwrap().to_ascii_lowercase(),
                    );
                    i += 1;
                } else {
                    break;
                }
            }
            if tags.is_empty() {
                return Err(CifError::MalformedLoop {
                    line: start_line,
                    token: "loop_".to_string(),
                });
            }
            // data rows: tokens accumulate until they fill rows of len(tags)
            let mut rows = Vec::new();
            let mut pending: Vec<String> = Vec::new();
            while i < lines.len() {
                let t = lines[i].trim();
                if t.is_empty()
                    || t.starts_with('_')
                    || t.eq_ignore_ascii_case("loop_")
                    || t.to_ascii_lowercase().starts_with("data_")
                {
                    break;
                }
                if t.starts_with('#') {
                    i += 1;
                    continue;
                }
                pending.extend(tokenize(t));
                while pending.len() >= tags.len() {
                    let row: Vec<String> = pending.drain(..tags.len()).collect();
                    rows.push(row);
                }
                i += 1;
            }
            if !pending.is_empty() {
                return Err(CifError::MalformedLoop {
                    line: i,
                    token: pending[0].clone(),
                });
            }
            loops.push(Loop {
                tags,
                rows,
                start_line,
            });
            continue;
        }
        if trimmed.starts_with('_') {
            let mut toks = tokenize(trimmed);
            if toks.len() >= 2 {
                let tag = toks.remove(0).to_ascii_lowercase();
                items.push((tag, toks.remove(0), line_no));
            } else if toks.len() == 1 {
                // value on the next line (possibly a multi-line ; block we skip)
                let tag = toks[0].to_ascii_lowercase();
                if i + 1 < lines.len() {
                    let next = lines[i + 1].trim();
                    if next.starts_with(';') {
                        // skip text field
                        i += 2;
                        while i < lines.len() && !lines[i].trim_start().starts_with(';') {
                            i += 1;
                        }
                    } else if !next.is_empty() && !next.starts_with('_') {
                        let vals = tokenize(next);
                        if let Some(v) = vals.into_iter().next() {
                            items.push((tag, v, line_no + 1));
                        }
                        i += 1;
                    }
                }
            }
            i += 1;
            continue;
        }
        i += 1;
    }

    // cell parameters
    let find = |name: &str| -> Option<(String, usize)> {
        items
            .iter()
            .find(|(tag, _, _)| tag == name)
            .map(|(_, v, l)| (v.clone(), *l))
    };
    let mut cell = [0.0; 6];
    for (idx, name) in [
        "_cell_length_a",
        "_cell_length_b",
        "_cell_length_c",
        "_cell_angle_alpha",
        "_cell_angle_beta",
        "_cell_angle_gamma",
    ]
    .iter()
    .enumerate()
    {
        let (value, line) = find(name)
            .ok_or_else(|| CifError::MissingCellParameter(name.to_string()))?;
        cell[idx] = parse_cif_number(&value, line)?;
    }
    let lengths_nm = [cell[0] * 0.1, cell[1] * 0.1, cell[2] * 0.1];
    let angles_deg = [cell[3], cell[4], cell[5]];
    for (i, &l) in lengths_nm.iter().enumerate() {
        if l <= 0.0 {
            return Err(CifError::CellParameterOutOfRange {
                name: format!("_cell_length_{}", ["a", "b", "c"][i]),
                value: l * 10.0,
            });
        }
    }
    for (i, &a) in angles_deg.iter().enumerate() {
        if a <= 0.0 || a >= 180.0 {
            return Err(CifError::CellParameterOutOfRange {
                name: format!("_cell_angle_{}", ["alpha", "beta", "gamma"][i]),
                value: a,
            });
        }
    }

    // symmetry operators
    let mut ops = Vec::new();
    for lp in &loops {
        let op_col = lp.tags.iter().position(|t| {
            t == "_symmetry_equiv_pos_as_xyz" || t == "_space_group_symop_operation_as_xyz"
        });
        if let Some(col) = op_col {
            for row in &lp.rows {
                ops.push(SymmetryOp::parse(&row[col], lp.start_line)?);
            }
        }
    }
    if ops.is_empty() {
        ops.push(SymmetryOp::identity());
    }

    // atom sites
    let site_loop = loops
        .iter()
        .find(|lp| lp.tags.iter().any(|t| t == "_atom_site_fract_x"))
        .ok_or(CifError::NoAtomSites)?;
    let col = |name: &str| site_loop.tags.iter().position(|t| t == name);
    let (cx, cy, cz) = match (
        col("_atom_site_fract_x"),
        col("_atom_site_fract_y"),
        col("_atom_site_fract_z"),
    ) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(CifError::MalformedLoop {
                line: site_loop.start_line,
                token: "_atom_site_fract_*".to_string(),
            })
        }
    };
    let c_symbol = col("_atom_site_type_symbol").or_else(|| col("_atom_site_label"));
    let c_symbol = c_symbol.ok_or(CifError::MalformedLoop {
        line: site_loop.start_line,
        token: "_atom_site_type_symbol".to_string(),
    })?;
    let c_occ = col("_atom_site_occupancy");

    let cell_m = cell_matrix(lengths_nm, angles_deg);
    let mut sites = Vec::new();
    for row in &site_loop.rows {
        let line = site_loop.start_line;
        let symbol = &row[c_symbol];
        let z = site_token_to_z(symbol).ok_or_else(|| CifError::UnknownElementSymbol {
            symbol: symbol.clone(),
            line,
        })?;
        let frac = [
            parse_cif_number(&row[cx], line)?,
            parse_cif_number(&row[cy], line)?,
            parse_cif_number(&row[cz], line)?,
        ];
        let occupancy = match c_occ {
            Some(c) => {
                let tok = &row[c];
                if tok == "." || tok == "?" {
                    1.0
                } else {
                    parse_cif_number(tok, line)?.clamp(0.0, 1.0)
                }
            }
            None => 1.0,
        };
        if occupancy == 0.0 {
            continue;
        }
        // symmetry expansion with dedup inside this site's orbit
        let mut orbit: Vec<[f64; 3]> = Vec::new();
        for op in &ops {
            let mut pos = op.apply(frac);
            for v in pos.iter_mut() {
                *v -= v.floor();
                if *v >= 1.0 - 1e-9 {
                    *v = 0.0;
                }
            }
            let dup = orbit.iter().any(|other| {
                min_image_distance_nm(&cell_m, pos, *other) < DEDUP_TOLERANCE_NM
            });
            if !dup {
                orbit.push(pos);
            }
        }
        for pos in orbit {
            sites.push(Site {
                z,
                fractional: pos,
                occupancy,
            });
        }
    }
    if sites.is_empty() {
        return Err(CifError::NoAtomSites);
    }

    Ok(CrystalStructure {
        cell_lengths_nm: lengths_nm,
        cell_angles_deg: angles_deg,
        sites,
    })
}

/// Minimum-image cartesian distance between two fractional positions, nm.
fn min_image_distance_nm(cell: &[[f64; 3]; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let mut d = [0.0; 3];
    for i in 0..3 {
        let mut diff = a[i] - b[i];
        diff -= diff.round();
        d[i] = diff;
    }
    let mut cart = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            cart[i] += cell[i][j] * d[j];
        }
    }
    (cart[0] * cart[0] + cart[1] * cart[1] + cart[2] * cart[2]).sqrt()
}

/// Write a structure back out as a P1 CIF (identity symmetry, expanded
/// sites). Used for debug dumps and round-trip checks.
pub fn to_cif_string(crystal: &CrystalStructure) -> String {
    let mut out = String::new();
    out.push_str("data_exitwave\n");
    out.push_str(&format!(
        "_cell_length_a {:.12}\n_cell_length_b {:.12}\n_cell_length_c {:.12}\n",
        crystal.cell_lengths_nm[0] * 10.0,
        crystal.cell_lengths_nm[1] * 10.0,
        crystal.cell_lengths_nm[2] * 10.0,
    ));
    out.push_str(&format!(
        "_cell_angle_alpha {:.12}\n_cell_angle_beta {:.12}\n_cell_angle_gamma {:.12}\n",
        crystal.cell_angles_deg[0], crystal.cell_angles_deg[1], crystal.cell_angles_deg[2],
    ));
    out.push_str("loop_\n_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n_atom_site_occupancy\n");
    for site in &crystal.sites {
        out.push_str(&format!(
            "{} {:.15} {:.15} {:.15} {:.15}\n",
            z_to_symbol(site.z).unwrap_or("X"),
            site.fractional[0],
            site.fractional[1],
            site.fractional[2],
            site.occupancy,
        ));
    }
    out
}
