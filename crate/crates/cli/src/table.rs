use std::fs;
use std::path::Path;

use advlin_core::simulate::format_real;

use crate::error::{CliError, CliResult};

/// A CSV file held in memory: a header and string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// A cell: reals use 17 significant digits, everything else its `Display`.
pub enum Cell {
    Real(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Real(x) => format_real(x),
            Cell::Text(s) => s,
        }
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row.into_iter().map(Cell::render).collect());
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Value of `column` in row `i`, parsed as a real.
    pub fn real(&self, i: usize, column: &str) -> Option<f64> {
        let j = self.header.iter().position(|h| h == column)?;
        self.rows.get(i)?.get(j)?.parse().ok()
    }

    pub fn to_csv_bytes(&self) -> CliResult<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let wrap = |e: csv::Error| CliError::io("<memory>", std::io::Error::other(e.to_string()));
        writer.write_record(&self.header).map_err(wrap)?;
        for row in &self.rows {
            writer.write_record(row).map_err(wrap)?;
        }
        writer
            .into_inner()
            .map_err(|e| CliError::io("<memory>", std::io::Error::other(e.to_string())))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, self.to_csv_bytes()?).map_err(|e| CliError::io(path, e))
    }
}
