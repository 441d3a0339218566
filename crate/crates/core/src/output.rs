//! CSV tables with a `#`-prefixed provenance preamble.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.8e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Int(b as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Header lines written before the column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub command: String,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: &str) -> Self {
        Provenance {
            tool: "qcoupler".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: config_sha256.into(),
            command: command.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Validation(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Numeric column by name; text cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[k] {
                    Cell::Num(x) => *x,
                    Cell::Int(i) => *i as f64,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn to_csv(&self, prov: &Provenance) -> Result<String> {
        let mut buf = Vec::new();
        writeln!(buf, "# tool: {}", prov.tool).expect("vec write");
        writeln!(buf, "# version: {}", prov.version).expect("vec write");
        writeln!(buf, "# config_sha256: {}", prov.config_sha256).expect("vec write");
        writeln!(buf, "# command: {}", prov.command).expect("vec write");
        {
            let mut w = csv::WriterBuilder::new().from_writer(&mut buf);
            w.write_record(&self.columns).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::render))
                    .map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Data(e.to_string()))?;
        }
        String::from_utf8(buf).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn write(&self, path: &Path, prov: &Provenance) -> Result<()> {
        let text = self.to_csv(prov)?;
        std::fs::write(path, text)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

/// Parses a table written by [`Table::to_csv`], skipping the preamble.
pub fn read_table(text: &str) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let columns: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        table.rows.push(
            rec.iter()
                .map(|s| match s.parse::<f64>() {
                    Ok(x) => Cell::Num(x),
                    Err(_) => Cell::Text(s.to_string()),
                })
                .collect(),
        );
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preamble_then_header() {
        let mut t = Table::new(&["x", "tag"]);
        t.push(vec![0.5.into(), "A".into()]).unwrap();
        let text = t.to_csv(&Provenance::new("demo", "abc")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# tool: qcoupler");
        assert_eq!(lines[2], "# config_sha256: abc");
        assert_eq!(lines[4], "x,tag");
        assert_eq!(lines[5], "5.00000000e-1,A");
    }

    #[test]
    fn round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.25e-7.into(), 3usize.into()]).unwrap();
        let back = read_table(&t.to_csv(&Provenance::new("x", "y")).unwrap()).unwrap();
        assert_eq!(back.column("a").unwrap(), vec![1.25e-7]);
        assert_eq!(back.column("b").unwrap(), vec![3.0]);
    }

    #[test]
    fn ragged_row_rejected() {
        let mut t = Table::new(&["a", "b"]);
        assert!(t.push(vec![1.0.into()]).is_err());
    }
}
