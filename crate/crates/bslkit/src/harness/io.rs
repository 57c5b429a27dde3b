//! CSV/JSON output helpers. All writers are deterministic: same inputs,
//! byte-identical files.

use crate::error::Result;
use nalgebra::DMatrix;
use serde::Serialize;
use std::fs;
use std::path::Path;

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

/// Write a matrix as CSV with the given column headers.
pub fn write_matrix_csv(path: &Path, headers: &[&str], matrix: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(headers)?;
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format_float(matrix[(i, j)]))
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write named columns of equal length as CSV.
pub fn write_columns_csv(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(columns.iter().map(|(name, _)| *name))?;
    let rows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|(_, c)| format_float(c[i])).collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a numeric CSV (with header) back into a matrix.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(
            record
                .iter()
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect(),
        );
    }
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Round-trippable float formatting (shortest representation that parses
/// back exactly).
fn format_float(v: f64) -> String {
    let mut buf = ryu_format(v);
    if buf.is_empty() {
        buf = format!("{v}");
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // format! already produces the shortest round-trippable form for f64
    format!("{v}")
}
