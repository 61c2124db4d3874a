//! On-disk formats for matrices and vectors.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! matrix:  "SPKMAT01" | u64 rows | u64 cols | rows*cols f64, column-major
//! vector:  "SPKVEC01" | u64 len  | len f64
//! ```
//!
//! CSV mirrors are plain rows of decimal numbers (one matrix row per line),
//! written with shortest round-trip formatting, `.` decimal separator and LF
//! line endings.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matgen::SymmetricMatrix;

pub const MATRIX_MAGIC: &[u8; 8] = b"SPKMAT01";
pub const VECTOR_MAGIC: &[u8; 8] = b"SPKVEC01";

pub fn write_matrix<W: Write>(m: &SymmetricMatrix, mut w: W) -> Result<()> {
    let n = m.n() as u64;
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    // column-major payload
    for j in 0..m.n() {
        for i in 0..m.n() {
            w.write_all(&m.get(i, j).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_matrix_file(m: &SymmetricMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(m, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Read a matrix and validate it as square, finite and exactly symmetric.
pub fn read_matrix<R: Read>(mut r: R) -> Result<SymmetricMatrix> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::InvalidFormat(format!(
            "bad matrix magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(MATRIX_MAGIC)
        )));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    if rows != cols {
        return Err(Error::InvalidFormat(format!("matrix is {rows}x{cols}, expected square")));
    }
    if rows == 0 {
        return Err(Error::InvalidFormat("empty matrix".into()));
    }
    let total = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::InvalidFormat("matrix dimensions overflow".into()))?;
    let mut payload = vec![0.0f64; total];
    let mut buf = [0u8; 8];
    // column-major on disk -> row-major in memory
    for j in 0..cols {
        for i in 0..rows {
            r.read_exact(&mut buf)?;
            payload[i * cols + j] = f64::from_le_bytes(buf);
        }
    }
    SymmetricMatrix::from_dense(rows, payload)
}

pub fn read_matrix_file(path: &Path) -> Result<SymmetricMatrix> {
    read_matrix(BufReader::new(File::open(path)?))
}

pub fn write_vector<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    w.write_all(VECTOR_MAGIC)?;
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_vector_file(v: &[f64], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vector(v, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_vector<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != VECTOR_MAGIC {
        return Err(Error::InvalidFormat(format!(
            "bad vector magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(VECTOR_MAGIC)
        )));
    }
    let len = read_u64(&mut r)? as usize;
    let mut out = vec![0.0f64; len];
    let mut buf = [0u8; 8];
    for x in &mut out {
        r.read_exact(&mut buf)?;
        *x = f64::from_le_bytes(buf);
    }
    Ok(out)
}

pub fn read_vector_file(path: &Path) -> Result<Vec<f64>> {
    read_vector(BufReader::new(File::open(path)?))
}

pub fn write_matrix_csv<W: Write>(m: &SymmetricMatrix, mut w: W) -> Result<()> {
    let n = m.n();
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for j in 0..n {
            if j > 0 {
                line.push(',');
            }
            push_f64(&mut line, m.get(i, j));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_matrix_csv_file(m: &SymmetricMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_csv(m, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_vector_csv<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    let mut line = String::new();
    for x in v {
        line.clear();
        push_f64(&mut line, *x);
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_vector_csv_file(v: &[f64], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vector_csv(v, &mut w)?;
    w.flush()?;
    Ok(())
}

fn push_f64(out: &mut String, v: f64) {
    use std::fmt::Write as _;
    // {:?} gives the shortest representation that round-trips
    let _ = write!(out, "{v:?}");
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
