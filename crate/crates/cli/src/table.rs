use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// Undefined value, e.g. a ratio with a vanishing denominator.
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => x.to_string(),
            Cell::Num(_) | Cell::Missing => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Missing => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Num(n as f64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

/// Builds a row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($value:expr),* $(,)?) => {
        vec![$($crate::table::Cell::from($value)),*]
    };
}

/// One output file: axes first, then values, one grid point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Empty for the primary table; otherwise appended to the file stem.
    pub suffix: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(suffix: &'static str, columns: &[&'static str]) -> Self {
        Table {
            suffix,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {:?}", self.columns);
        self.rows.push(row);
    }

    /// File name relative to a base name such as `tables`.
    pub fn file_name(&self, stem: &str, format: Format) -> String {
        if self.suffix.is_empty() {
            format!("{stem}.{}", format.extension())
        } else {
            format!("{stem}_{}.{}", self.suffix, format.extension())
        }
    }
}

/// Provenance block written at the top of every file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub command: String,
    pub config: Value,
    pub seed: u64,
}

impl Header {
    pub fn config_line(&self) -> String {
        format!("# config: {}", self.config)
    }

    pub fn seed_line(&self) -> String {
        format!("# seed: {}", self.seed)
    }
}

pub fn render_csv(header: &Header, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    writeln!(buf, "# {} {}", env!("CARGO_BIN_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(buf, "# command: {}", header.command)?;
    writeln!(buf, "{}", header.config_line())?;
    writeln!(buf, "{}", header.seed_line())?;
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn render_json(header: &Header, table: &Table) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
        .collect();
    let doc = json!({
        "tool": env!("CARGO_BIN_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": header.command,
        "config": header.config,
        "seed": header.seed,
        "columns": table.columns,
        "rows": rows,
    });
    let mut out = serde_json::to_vec_pretty(&doc)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes next to the target and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = PathBuf::from(path);
    tmp.set_file_name(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Header, Table) {
        let mut t = Table::new("", &["n", "value", "label"]);
        t.push(row![1usize, 0.25, "a"]);
        t.push(row![2usize, None, "b,c"]);
        let h = Header {
            command: "demo".into(),
            config: json!({"n_max": 2}),
            seed: 7,
        };
        (h, t)
    }

    #[test]
    fn csv_layout() {
        let (h, t) = sample();
        let text = String::from_utf8(render_csv(&h, &t).unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# ifm "));
        assert_eq!(lines[1], "# command: demo");
        assert_eq!(lines[2], r#"# config: {"n_max":2}"#);
        assert_eq!(lines[3], "# seed: 7");
        assert_eq!(&lines[4..], ["n,value,label", "1,0.25,a", "2,,\"b,c\""]);
    }

    #[test]
    fn json_mirrors_rows() {
        let (h, t) = sample();
        let doc: Value = serde_json::from_slice(&render_json(&h, &t).unwrap()).unwrap();
        assert_eq!(doc["rows"][1], json!([2.0, null, "b,c"]));
        assert_eq!(doc["seed"], json!(7));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
