//! CSV tables written atomically (temporary file, then rename).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

/// Formats `v` in scientific notation with `digits` significant digits.
pub fn format_float(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{:.*e}", digits.saturating_sub(1), v)
    } else {
        v.to_string()
    }
}

impl Cell {
    pub fn render(&self, digits: usize) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x, digits),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

/// Header plus rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    pub fn to_bytes(&self, digits: usize) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render(digits)))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }

    /// Writes `<dir>/<name>.csv` and returns its path.
    pub fn write(&self, dir: &Path, digits: usize) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        let tmp = dir.join(format!(".{}.csv.tmp", self.name));
        fs::write(&tmp, self.to_bytes(digits)?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1, 17), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5, 3), "-2.50e0");
    }

    #[test]
    fn renders_header_and_missing() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![1usize.into(), Cell::Missing]);
        assert_eq!(String::from_utf8(t.to_bytes(17).unwrap()).unwrap(), "a,b\n1,\n");
    }
}
