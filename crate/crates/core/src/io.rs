//! On-disk formats.
//!
//! * Series binary: magic `IPA1`, u64 `T`, u64 `D`, then `T*D` little-endian
//!   f64 in time-major row order.
//! * Matrix binary: magic `IPM1`, u64 rows, u64 cols, f64 row-major.
//! * Series CSV: header `c0,...,c{D-1}`, one row per time step.
//! * Matrix CSV: plain rows of numbers, no header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tsmodel::TimeSeries;

pub const SERIES_MAGIC: &[u8; 4] = b"IPA1";
pub const MATRIX_MAGIC: &[u8; 4] = b"IPM1";

fn write_binary(path: &Path, magic: &[u8; 4], m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(magic)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.write_all(&m[(r, c)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_binary_body(r: &mut impl Read) -> Result<DMatrix<f64>> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("matrix header overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "expected {} payload bytes for {rows}x{cols}, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &vals))
}

pub fn write_series_bin(path: impl AsRef<Path>, s: &TimeSeries) -> Result<()> {
    write_binary(path.as_ref(), SERIES_MAGIC, s.data())
}

pub fn write_matrix_bin(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_binary(path.as_ref(), MATRIX_MAGIC, m)
}

fn write_csv(path: &Path, m: &DMatrix<f64>, header: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if header {
        let names: Vec<String> = (0..m.ncols()).map(|c| format!("c{c}")).collect();
        writeln!(w, "{}", names.join(","))?;
    }
    let mut line = String::new();
    for r in 0..m.nrows() {
        line.clear();
        for c in 0..m.ncols() {
            if c > 0 {
                line.push(',');
            }
            // `{}` on f64 is the shortest string that round-trips exactly
            line.push_str(&format!("{}", m[(r, c)]));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_csv(path: impl AsRef<Path>, s: &TimeSeries) -> Result<()> {
    write_csv(path.as_ref(), s.data(), true)
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_csv(path.as_ref(), m, false)
}

/// Reads numeric CSV; a first line that does not parse as numbers is
/// treated as a header.
fn read_csv(path: &Path) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if lineno == 0 => continue,
            Err(e) => return Err(Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1))),
        }
    }
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Format(format!(
            "{}: row {} has {} fields, expected {cols}",
            path.display(),
            i + 1,
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Loads a matrix from either binary format or CSV, detected by magic.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut f = File::open(path)?;
    let mut magic = [0u8; 4];
    let n = f.read(&mut magic)?;
    if n == 4 && (&magic == MATRIX_MAGIC || &magic == SERIES_MAGIC) {
        let mut r = BufReader::new(f);
        return read_binary_body(&mut r);
    }
    drop(f);
    read_csv(path)
}

pub fn read_series(path: impl AsRef<Path>) -> Result<TimeSeries> {
    TimeSeries::new(read_matrix(path)?)
}
