//! Deterministic CSV and JSON artifacts.

use serde::Serialize;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A CSV table held in memory and written in one go.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated text with a header row and LF line endings.
    pub fn to_csv(&self) -> io::Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        String::from_utf8(bytes).map_err(io::Error::other)
    }
}

/// Cell helpers.
pub fn f(v: f64) -> String {
    fmt_f64(v)
}

pub fn i(v: impl std::fmt::Display) -> String {
    v.to_string()
}

/// Writes `table` as `dir/name`, returning the path.
pub fn write_table(dir: &Path, name: &str, table: &Table) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, table.to_csv()?)?;
    Ok(path)
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1e-300, 123456789.123, -2.5e17, 1.0 / 3.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }

    #[test]
    fn csv_has_lf_endings() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![f(1.5), i(2)]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.5,2\n");
    }
}
