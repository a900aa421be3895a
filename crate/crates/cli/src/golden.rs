//! Regression checks against committed CSV files.
//!
//! `tolerances.toml` in the golden directory sets a default tolerance and
//! per-file overrides:
//!
//! ```toml
//! [default]
//! abs = 1e-9
//!
//! [files."tables.csv"]
//! sig_digits = 4
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::table::{Cell, Header, Table};
use crate::CliError;

pub const MANIFEST: &str = "tolerances.toml";
const MAX_REPORTED: usize = 10;

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub abs: Option<f64>,
    pub rel: Option<f64>,
    /// Agreement to this many significant digits of the golden value.
    pub sig_digits: Option<u32>,
}

impl Tolerance {
    /// Largest accepted deviation from `want`. A tolerance with nothing set
    /// demands exact equality.
    fn bound(&self, want: f64) -> f64 {
        let mut bound = self.abs.unwrap_or(0.0);
        if let Some(rel) = self.rel {
            bound = bound.max(rel * want.abs());
        }
        if let (Some(d), true) = (self.sig_digits, want != 0.0) {
            let magnitude = want.abs().log10().floor() as i32;
            bound = bound.max(0.5 * 10f64.powi(magnitude + 1 - d as i32));
        }
        bound
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub default: Tolerance,
    #[serde(default)]
    pub files: BTreeMap<String, Tolerance>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        toml::from_str(&fs::read_to_string(&path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn for_file(&self, name: &str) -> Tolerance {
        self.files.get(name).copied().unwrap_or(self.default)
    }
}

/// Differences between a freshly computed table and its golden file. An
/// empty result means the table matches.
pub fn compare(golden: &Path, header: &Header, table: &Table, tol: Tolerance) -> Result<Vec<String>, CliError> {
    let name = golden.display();
    let text = match fs::read_to_string(golden) {
        Ok(text) => text,
        Err(e) => return Ok(vec![format!("{name}: cannot read golden file ({e})")]),
    };
    let mut diffs = Vec::new();
    for (want, what) in [(header.config_line(), "config"), (header.seed_line(), "seed")] {
        if !text.lines().any(|l| l == want) {
            diffs.push(format!("{name}: {what} differs from the golden run"));
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if columns != table.columns {
        diffs.push(format!("{name}: columns {columns:?}, computed {:?}", table.columns));
        return Ok(diffs);
    }
    let records = reader.records().collect::<Result<Vec<_>, _>>()?;
    if records.len() != table.rows.len() {
        diffs.push(format!("{name}: {} rows, computed {}", records.len(), table.rows.len()));
        return Ok(diffs);
    }
    let mut mismatches = 0;
    for (i, (record, row)) in records.iter().zip(&table.rows).enumerate() {
        for ((want, got), col) in record.iter().zip(row).zip(&table.columns) {
            if let Some(why) = cell_mismatch(want, got, tol) {
                mismatches += 1;
                if mismatches <= MAX_REPORTED {
                    diffs.push(format!("{name}: row {} column {col}: {why}", i + 1));
                }
            }
        }
    }
    if mismatches > MAX_REPORTED {
        diffs.push(format!("{name}: {} further mismatches", mismatches - MAX_REPORTED));
    }
    Ok(diffs)
}

fn cell_mismatch(want: &str, got: &Cell, tol: Tolerance) -> Option<String> {
    match (got, want.parse::<f64>()) {
        (Cell::Num(x), Ok(w)) => {
            let bound = tol.bound(w);
            ((x - w).abs() > bound).then(|| format!("golden {want}, computed {x} (tolerance {bound:e})"))
        }
        (Cell::Missing, _) if want.is_empty() => None,
        (Cell::Num(x), _) if want.is_empty() && !x.is_finite() => None,
        (Cell::Text(s), _) if s == want => None,
        _ => Some(format!("golden `{want}`, computed {got:?}")),
    }
}
