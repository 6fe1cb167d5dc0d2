use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::commands::CliError;

/// A flat table for `--csv` output.
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Self {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// A value that can appear in a CSV table.
pub trait Cell {
    fn to_cell(&self) -> String;
}

impl Cell for f64 {
    /// Shortest round-trip form; switches to exponent notation for tiny values.
    fn to_cell(&self) -> String {
        format!("{self:?}")
    }
}

impl Cell for usize {
    fn to_cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for bool {
    fn to_cell(&self) -> String {
        self.to_string()
    }
}

impl<T: Cell> Cell for &T {
    fn to_cell(&self) -> String {
        (*self).to_cell()
    }
}

pub fn cell(v: impl Cell) -> String {
    v.to_cell()
}

pub fn emit<T: Serialize>(
    report: &T,
    table: &Table,
    csv: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let bytes = if csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.headers).map_err(io_err)?;
        for row in &table.rows {
            w.write_record(row).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))?
    } else {
        let mut s = serde_json::to_vec_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
        s.push(b'\n');
        s
    };
    match out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells() {
        assert_eq!(cell(0.9), "0.9");
        assert_eq!(cell(1.5e-17), "1.5e-17");
        assert_eq!(cell(3usize), "3");
        let values = [0.5];
        assert_eq!(values.iter().map(cell).collect::<Vec<_>>(), ["0.5"]);
        assert_eq!(cell(true), "true");
    }

    #[test]
    fn csv_output_to_file() {
        let dir = std::env::temp_dir().join(format!("entdist-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![cell(1usize), "x,y".into()]);
        emit(&(), &t, true, Some(&path)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,\"x,y\"\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
