//! Matrix files and CSV exports.
//!
//! Two matrix formats are supported:
//!
//! * CSV: a `rows,cols` header line followed by the entries in row-major
//!   order, one matrix row per line.
//! * Binary: the magic bytes `CAMX`, `rows` and `cols` as little-endian
//!   `u32`, then `rows * cols` little-endian `f64` values in row-major order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::MeasurementMatrix;

pub const BINARY_MAGIC: &[u8; 4] = b"CAMX";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl MatrixFormat {
    /// `.csv`/`.txt` are CSV, anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                MatrixFormat::Csv
            }
            _ => MatrixFormat::Binary,
        }
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<MeasurementMatrix> {
    match format {
        MatrixFormat::Csv => parse_csv(path, &fs::read_to_string(path)?),
        MatrixFormat::Binary => parse_binary(path, &fs::read(path)?),
    }
}

pub fn save_matrix(m: &MeasurementMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let data = m.data();
    match format {
        MatrixFormat::Csv => {
            writeln!(w, "{},{}", m.rows(), m.cols())?;
            for i in 0..m.rows() {
                let line: Vec<String> = (0..m.cols()).map(|j| format!("{:e}", data[(i, j)])).collect();
                writeln!(w, "{}", line.join(","))?;
            }
        }
        MatrixFormat::Binary => {
            let rows = u32::try_from(m.rows()).map_err(|_| Error::Dimension("rows exceed u32".into()))?;
            let cols = u32::try_from(m.cols()).map_err(|_| Error::Dimension("cols exceed u32".into()))?;
            w.write_all(BINARY_MAGIC)?;
            w.write_all(&rows.to_le_bytes())?;
            w.write_all(&cols.to_le_bytes())?;
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    w.write_all(&data[(i, j)].to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_csv(path: &Path, text: &str) -> Result<MeasurementMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| parse_err(path, "empty file"))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(path, format!("bad header '{header}': {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(parse_err(path, format!("header must be 'rows,cols', got '{header}'")));
    };
    let mut values = Vec::with_capacity(rows * cols);
    for (lineno, line) in lines.enumerate() {
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|e| parse_err(path, format!("line {}: '{tok}': {e}", lineno + 2)))?;
            values.push(v);
        }
    }
    if values.len() != rows * cols {
        return Err(parse_err(
            path,
            format!("header says {rows}x{cols} but found {} values", values.len()),
        ));
    }
    MeasurementMatrix::from_row_major(rows, cols, &values)
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<MeasurementMatrix> {
    if bytes.len() < 12 || &bytes[..4] != BINARY_MAGIC {
        return Err(parse_err(path, "missing CAMX header"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[12..];
    if payload.len() != rows * cols * 8 {
        return Err(parse_err(
            path,
            format!(
                "header says {rows}x{cols} ({} bytes) but payload has {} bytes",
                rows * cols * 8,
                payload.len()
            ),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    MeasurementMatrix::from_row_major(rows, cols, &values)
}

/// One value per line under a single header.
pub fn write_values_csv(path: &Path, header: &str, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for v in values {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}
