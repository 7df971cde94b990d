//! CSV files for positive-confidence and labeled data.
//!
//! Pconf files have header `x1,...,xd,r`; labeled files `x1,...,xd,y` with
//! `y` written as `1` or `-1`. Confidences are clamped on load.

use std::path::Path;

use crate::error::{Error, Result};
use crate::risk::{clamp_confidence, LabeledSample, PconfSample};

fn header(dim: usize, last: &str) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).chain([last.to_string()]).collect()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path.display().to_string(), format!("{other:?}")),
    }
}

fn write_rows<'a>(path: &Path, dim: usize, last: &str, rows: impl Iterator<Item = (&'a [f64], String)>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header(dim, last)).map_err(|e| csv_error(path, e))?;
    for (x, tail) in rows {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(tail);
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn common_dim<'a>(xs: impl Iterator<Item = &'a [f64]>) -> Result<usize> {
    let mut dim = None;
    for x in xs {
        match dim {
            None => dim = Some(x.len()),
            Some(d) if d != x.len() => {
                return Err(Error::Shape {
                    what: "pattern",
                    expected: d,
                    actual: x.len(),
                })
            }
            _ => {}
        }
    }
    dim.ok_or_else(|| Error::domain("cannot write an empty dataset"))
}

pub fn write_pconf_csv(path: &Path, samples: &[PconfSample]) -> Result<()> {
    let dim = common_dim(samples.iter().map(|s| s.x.as_slice()))?;
    write_rows(path, dim, "r", samples.iter().map(|s| (s.x.as_slice(), s.r.to_string())))
}

pub fn write_labeled_csv(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    let dim = common_dim(samples.iter().map(|s| s.x.as_slice()))?;
    write_rows(path, dim, "y", samples.iter().map(|s| (s.x.as_slice(), s.y.to_string())))
}

/// Columns of a dataset file: pattern columns plus the named target column.
struct Table {
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::format(&name, format!("row {}: invalid number '{tok}'", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != columns.len() {
            return Err(Error::format(&name, format!("row {} has {} fields, expected {}", line + 1, row.len(), columns.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(&name, format!("row {}: non-finite value", line + 1)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(&name, "no data rows"));
    }
    Ok(Table { name, columns, rows })
}

impl Table {
    /// Checks the header is `x1..xd,<target>` and returns `d`.
    fn pattern_dim(&self, target: &str) -> Result<usize> {
        let last = self.columns.last().map(String::as_str);
        if last != Some(target) {
            return Err(Error::format(
                &self.name,
                format!("missing column '{target}' (expected header x1,...,xd,{target})"),
            ));
        }
        let dim = self.columns.len() - 1;
        for (i, c) in self.columns[..dim].iter().enumerate() {
            if *c != format!("x{}", i + 1) {
                return Err(Error::format(&self.name, format!("unexpected column '{c}', expected 'x{}'", i + 1)));
            }
        }
        if dim == 0 {
            return Err(Error::format(&self.name, "no pattern columns"));
        }
        Ok(dim)
    }
}

/// Reads a Pconf file and clamps confidences to `floor`.
pub fn read_pconf_csv(path: &Path, floor: f64) -> Result<Vec<PconfSample>> {
    let table = read_table(path)?;
    let dim = table.pattern_dim("r")?;
    table
        .rows
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            let r = row.pop().expect("width checked");
            let r = clamp_confidence(r, floor)
                .map_err(|e| Error::format(&table.name, format!("row {}: {e}", i + 1)))?;
            debug_assert_eq!(row.len(), dim);
            Ok(PconfSample::new(row, r))
        })
        .collect()
}

pub fn read_labeled_csv(path: &Path) -> Result<Vec<LabeledSample>> {
    let table = read_table(path)?;
    table.pattern_dim("y")?;
    table
        .rows
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            let y = row.pop().expect("width checked");
            let y = match y {
                1.0 => 1,
                -1.0 => -1,
                v => return Err(Error::format(&table.name, format!("row {}: label {v} is not 1 or -1", i + 1))),
            };
            Ok(LabeledSample { x: row, y })
        })
        .collect()
}
