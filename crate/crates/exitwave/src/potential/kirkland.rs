//! Loader for Kirkland-convention potential parameter tables.
//!
//! File format: whitespace-separated rows
//! `Z a1 b1 a2 b2 a3 b3 c1 d1 c2 d2 c3 d3`, with `#` comment lines.
//! Units follow the Kirkland convention: a in 1/Angstrom, b in
//! 1/Angstrom^2, c in Angstrom, d in Angstrom^2.

use std::collections::HashMap;
use thiserror::Error;

const BUNDLED_TABLE: &str = include_str!("../../data/kirkland_params.txt");

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("line {line}: expected 13 fields, found {found}")]
    WrongFieldCount { line: usize, found: usize },
    #[error("line {line}: cannot parse '{token}' as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: atomic number {z} outside [1, 103]")]
    BadAtomicNumber { line: usize, z: i64 },
    #[error("line {line}: b and d parameters must be positive")]
    NonPositiveWidth { line: usize },
    #[error("duplicate row for Z={0}")]
    DuplicateRow(u8),
}

/// One element's fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KirklandParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub d: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct KirklandTable {
    rows: HashMap<u8, KirklandParams>,
}

impl KirklandTable {
    /// Parse a table from text, validating field counts and positivity of
    /// the b/d range parameters.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut rows = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 13 {
                return Err(TableError::WrongFieldCount {
                    line,
                    found: fields.len(),
                });
            }
            let z: i64 = fields[0].parse().map_err(|_| TableError::BadNumber {
                line,
                token: fields[0].to_string(),
            })?;
            if !(1..=103).contains(&z) {
                return Err(TableError::BadAtomicNumber { line, z });
            }
            let mut nums = [0.0; 12];
            for (i, tok) in fields[1..].iter().enumerate() {
                nums[i] = tok.parse().map_err(|_| TableError::BadNumber {
                    line,
                    token: tok.to_string(),
                })?;
            }
            let params = KirklandParams {
                a: [nums[0], nums[2], nums[4]],
                b: [nums[1], nums[3], nums[5]],
                c: [nums[6], nums[8], nums[10]],
                d: [nums[7], nums[9], nums[11]],
            };
            if params.b.iter().any(|&v| v <= 0.0) || params.d.iter().any(|&v| v <= 0.0) {
                return Err(TableError::NonPositiveWidth { line });
            }
            let z = z as u8;
            if rows.insert(z, params).is_some() {
                return Err(TableError::DuplicateRow(z));
            }
        }
        Ok(Self { rows })
    }

    /// The table shipped with the crate, covering Z = 1..=103.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE).expect("bundled table is valid")
    }

    pub fn get(&self, z: u8) -> Option<&KirklandParams> {
        self.rows.get(&z)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_covers_all_elements() {
        let table = KirklandTable::bundled();
        assert_eq!(table.len(), 103);
        for z in 1..=103u8 {
            assert!(table.get(z).is_some(), "missing Z={z}");
        }
    }

    #[test]
    fn rejects_wrong_field_count() {
        let err = KirklandTable::parse("6 1.0 2.0").unwrap_err();
        assert!(matches!(err, TableError::WrongFieldCount { line: 1, found: 3 }));
    }

    #[test]
    fn rejects_non_positive_widths() {
        let row = "6 1 0.0 1 1 1 1 1 1 1 1 1 1";
        assert!(matches!(
            KirklandTable::parse(row).unwrap_err(),
            TableError::NonPositiveWidth { line: 1 }
        ));
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let text = "# header\n\n1 1 1 1 1 1 1 1 1 1 1 1 1  # trailing\n";
        let table = KirklandTable::parse(text).unwrap();
        assert_eq!(table.len(), 1);
    }
}
