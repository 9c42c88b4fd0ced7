//! Result tables with a fixed column schema, deterministic CSV output and
//! plot-ready extracts.

use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("column {0:?} is not numeric")]
    NotNumeric(String),

    #[error("row has {got} cells, schema has {want}")]
    Width { got: usize, want: usize },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            // Shortest round-trip representation; identical on every platform.
            Cell::Num(x) => format!("{x:?}"),
            Cell::Text(t) => t.clone(),
        }
    }

    fn cmp_key(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            _ => {
                let (a, b) = (self.as_f64().unwrap_or(f64::NAN), other.as_f64().unwrap_or(f64::NAN));
                a.total_cmp(&b)
            }
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    /// Number of leading columns that identify a row.
    pub keys: usize,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, f64>,
}

impl ResultTable {
    pub fn new(columns: &[&str], keys: usize) -> Self {
        assert!(keys <= columns.len());
        ResultTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            keys,
            rows: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::Width { got: row.len(), want: self.columns.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn stat(&mut self, name: &str, value: f64) {
        self.summary.insert(name.to_string(), value);
    }

    pub fn column(&self, name: &str) -> Result<usize, TableError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| TableError::MissingColumn(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<Vec<f64>, TableError> {
        let i = self.column(name)?;
        self.rows
            .iter()
            .map(|r| r[i].as_f64().ok_or_else(|| TableError::NotNumeric(name.to_string())))
            .collect()
    }

    /// Sorts rows by the key columns; stable, so ties keep insertion order.
    pub fn sort(&mut self) {
        let keys = self.keys;
        self.rows.sort_by(|a, b| {
            a[..keys].iter().zip(&b[..keys]).map(|(x, y)| x.cmp_key(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
        });
    }

    /// Comma-separated, LF-terminated, header always present.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TableError> {
        let mut out = csv_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::render))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Writes `x` against each of `ys`; with `log10` the `y` values are
/// transformed and their headers prefixed by `log10_`.
pub fn emit_plot_data<W: Write>(table: &ResultTable, x: &str, ys: &[String], log10: bool, w: W) -> Result<(), TableError> {
    let xs = table.numeric(x)?;
    let series: Vec<Vec<f64>> = ys.iter().map(|y| table.numeric(y)).collect::<Result<_, _>>()?;
    let mut out = csv_writer(w);
    let mut header = vec![x.to_string()];
    header.extend(ys.iter().map(|y| if log10 { format!("log10_{y}") } else { y.clone() }));
    out.write_record(&header)?;
    for (i, xv) in xs.iter().enumerate() {
        let mut record = vec![Cell::Num(*xv).render()];
        for s in &series {
            let v = if log10 { s[i].log10() } else { s[i] };
            record.push(Cell::Num(v).render());
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new(&["N", "error"], 1);
        t.push(vec![5usize.into(), 0.01.into()]).unwrap();
        t.push(vec![4usize.into(), 0.1.into()]).unwrap();
        t
    }

    #[test]
    fn csv_uses_lf_and_round_trip_floats() {
        let mut t = sample();
        t.push(vec![6usize.into(), (0.1 + 0.2).into()]).unwrap();
        t.sort();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "N,error\n4,0.1\n5,0.01\n6,0.30000000000000004\n");
    }

    #[test]
    fn plot_data_takes_logs() {
        let mut t = sample();
        t.sort();
        let mut buf = Vec::new();
        emit_plot_data(&t, "N", &["error".into()], true, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "N,log10_error\n4.0,-1.0\n5.0,-2.0\n");
    }

    #[test]
    fn empty_table_gives_header_only() {
        let t = ResultTable::new(&["level", "ratio"], 1);
        let mut buf = Vec::new();
        emit_plot_data(&t, "level", &["ratio".into()], false, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "level,ratio\n");
    }

    #[test]
    fn missing_columns_are_reported() {
        let t = sample();
        let err = emit_plot_data(&t, "N", &["nope".into()], false, Vec::new()).unwrap_err();
        assert!(matches!(err, TableError::MissingColumn(c) if c == "nope"));
    }
}
