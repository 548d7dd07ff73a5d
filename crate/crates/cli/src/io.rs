//! CSV and JSON artifacts.
//!
//! Input tables have a header row, a first column `t` that must be strictly
//! increasing and one column per curve. Curves are resampled onto the
//! configured uniform grid by linear interpolation; the domain
//! `[t_first, t_last]` is mapped onto `[0, 1]`, and outputs report `t` in
//! the original units.

use std::fs;
use std::path::Path;

use ppd_core::{FunctionSample, FunctionSet, Grid};
use serde::Serialize;

use crate::error::{CliError, Result};

/// The original abscissa range of an input table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub start: f64,
    pub end: f64,
}

impl Domain {
    pub const UNIT: Domain = Domain {
        start: 0.0,
        end: 1.0,
    };

    /// Abscissae of `grid` in the original units.
    pub fn abscissae(&self, grid: Grid) -> Vec<f64> {
        grid.points()
            .into_iter()
            .map(|x| self.start + x * (self.end - self.start))
            .collect()
    }
}

/// A parsed input table before resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub t: Vec<f64>,
    pub names: Vec<String>,
    /// One vector per curve, aligned with `t`.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn domain(&self) -> Domain {
        Domain {
            start: self.t[0],
            end: self.t[self.t.len() - 1],
        }
    }

    /// Curves linearly interpolated onto `grid`.
    pub fn resample(&self, grid: Grid) -> Result<FunctionSet> {
        let Domain { start, end } = self.domain();
        let targets: Vec<f64> = grid
            .points()
            .into_iter()
            .map(|x| start + x * (end - start))
            .collect();
        let functions = self
            .columns
            .iter()
            .map(|col| {
                let values = targets
                    .iter()
                    .map(|&x| interpolate(&self.t, col, x))
                    .collect();
                FunctionSample::new(grid, values).map_err(CliError::from)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FunctionSet::new(functions)?)
    }
}

fn interpolate(t: &[f64], v: &[f64], x: f64) -> f64 {
    let last = t.len() - 1;
    if x <= t[0] {
        return v[0];
    }
    if x >= t[last] {
        return v[last];
    }
    let i = t.partition_point(|&s| s <= x).clamp(1, last);
    let (t0, t1) = (t[i - 1], t[i]);
    let w = (x - t0) / (t1 - t0);
    v[i - 1] + w * (v[i] - v[i - 1])
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| {
        CliError::Data(format!(
            "row {row}, column {col}: cannot parse '{cell}' as a number"
        ))
    })?;
    if !value.is_finite() {
        return Err(CliError::Data(format!(
            "row {row}, column {col}: value is not finite"
        )));
    }
    Ok(value)
}

/// Parses a curve table. Rows and columns in diagnostics are 1-based and
/// count the header as row 1.
pub fn parse_table(reader: impl std::io::Read) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("row 1: {e}")))?
        .clone();
    if header.len() < 2 {
        return Err(CliError::Data(
            "header: need a `t` column and at least one curve".into(),
        ));
    }
    if header[0].trim() != "t" {
        return Err(CliError::Data(format!(
            "row 1, column 1: first column must be named `t`, found '{}'",
            &header[0]
        )));
    }
    let names: Vec<String> = header
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let mut t = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| CliError::Data(format!("row {row}: {e}")))?;
        let x = parse_cell(&record[0], row, 1)?;
        if let Some(&prev) = t.last() {
            if x <= prev {
                return Err(CliError::Data(format!(
                    "row {row}, column 1: `t` must be strictly increasing ({x} after {prev})"
                )));
            }
        }
        t.push(x);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_cell(&record[j + 1], row, j + 2)?);
        }
    }
    if t.len() < 2 {
        return Err(CliError::Data("need at least two data rows".into()));
    }
    Ok(Table { t, names, columns })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_table(file).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header and rows of numbers, one column per entry of `columns`.
pub fn write_columns(path: &Path, header: &[String], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_f64(c[r])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Writes `t` followed by one column per curve.
pub fn write_curves(
    path: &Path,
    domain: Domain,
    names: &[String],
    curves: &[&[f64]],
) -> Result<()> {
    let grid_len = curves.first().map_or(0, |c| c.len());
    let grid = Grid::new(grid_len)?;
    let t = domain.abscissae(grid);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    let mut columns: Vec<&[f64]> = vec![&t];
    columns.extend_from_slice(curves);
    write_columns(path, &header, &columns)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
