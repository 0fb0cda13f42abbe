//! Binary and CSV exchange formats for dense matrices and vectors.
//!
//! The binary layout is an 8-byte magic `RHTPMAT1`, two little-endian
//! `u64` dimensions (rows, cols), then `rows * cols` IEEE-754 doubles in
//! column-major order. Vectors are stored as single-column matrices.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RhtpError};

pub const MAGIC: &[u8; 8] = b"RHTPMAT1";

pub fn write_matrix<W: Write>(mut w: W, mat: &DMatrix<f64>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(mat.nrows() as u64).to_le_bytes())?;
    w.write_all(&(mat.ncols() as u64).to_le_bytes())?;
    // DMatrix is column-major internally, so the slice is already in file order.
    for v in mat.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(RhtpError::Format(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut dim = [0u8; 8];
    r.read_exact(&mut dim)?;
    let rows = u64::from_le_bytes(dim) as usize;
    r.read_exact(&mut dim)?;
    let cols = u64::from_le_bytes(dim) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| RhtpError::Format("dimension overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(DMatrix::from_column_slice(rows, cols, &data))
}

pub fn write_matrix_file<P: AsRef<Path>>(path: P, mat: &DMatrix<f64>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix(std::io::BufWriter::new(file), mat)
}

pub fn read_matrix_file<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let file = std::fs::File::open(path)?;
    read_matrix(std::io::BufReader::new(file))
}

pub fn write_vector_file<P: AsRef<Path>>(path: P, v: &DVector<f64>) -> Result<()> {
    let mat = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    write_matrix_file(path, &mat)
}

pub fn read_vector_file<P: AsRef<Path>>(path: P) -> Result<DVector<f64>> {
    let mat = read_matrix_file(path)?;
    if mat.ncols() != 1 {
        return Err(RhtpError::Format(format!(
            "expected a single-column matrix, got {} columns",
            mat.ncols()
        )));
    }
    Ok(DVector::from_column_slice(mat.as_slice()))
}

/// Plain-text loader: one row per line, comma-separated doubles.
pub fn read_matrix_csv<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| {
            RhtpError::Format(format!("line {}: {}", lineno + 1, e))
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(RhtpError::Format(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(RhtpError::Format("empty csv".into()));
    }
    let nrows = rows.len();
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv_file<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let file = std::fs::File::open(path)?;
    read_matrix_csv(std::io::BufReader::new(file))
}
