//! Matrix and sensor-list files.
//!
//! The binary matrix format is little-endian: the magic `CDMX`, a `u16`
//! version, `u32` rows, `u32` cols, then the entries as `f64` in column-major
//! order. Files ending in `.csv` are read and written as plain
//! text with one matrix row per line.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CDMX";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 4 + 4;

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Encodes a matrix in the binary format. Panics if a dimension exceeds `u32::MAX`.
pub fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    assert!(m.nrows() <= u32::MAX as usize && m.ncols() <= u32::MAX as usize);
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes the binary format. `path` is only used in error messages.
pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            path,
            format!("truncated header: expected at least {HEADER_LEN} bytes, got {}", bytes.len()),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(path, format!("bad magic {:?}, expected \"CDMX\"", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as u64;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as u64;
    let expected = HEADER_LEN as u64 + 8 * rows * cols;
    if expected != bytes.len() as u64 {
        return Err(Error::format(
            path,
            format!("length mismatch for {rows}x{cols} matrix: expected {expected} bytes, got {}", bytes.len()),
        ));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut values = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                path,
                format!("non-finite entry at row {}, col {}", k % rows, k / rows),
            ));
        }
        values.push(v);
    }
    Ok(DMatrix::from_vec(rows, cols, values))
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, s)| {
                let v: f64 = s.trim().parse().map_err(|e| {
                    Error::format(path, format!("line {}, field {}: {e}", lineno + 1, col + 1))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::format(
                        path,
                        format!("non-finite entry at row {}, col {col}", rows.len()),
                    ))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    path,
                    format!("line {}: expected {} fields, got {}", lineno + 1, first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Reads a matrix, choosing CSV or binary by the file extension.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    if is_csv(path) {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        matrix_from_csv(&text, path)
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_matrix(&bytes, path)
    }
}

pub fn write_matrix(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_csv(path) {
        matrix_to_csv(m).into_bytes()
    } else {
        encode_matrix(m)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a vector stored as an `n×1` or `1×n` matrix.
pub fn read_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let m = read_matrix(path)?;
    match m.shape() {
        (_, 1) => Ok(m.column(0).clone_owned()),
        (1, _) => Ok(m.row(0).transpose()),
        (r, c) => Err(Error::format(path, format!("expected a vector, found a {r}x{c} matrix"))),
    }
}

pub fn write_vector(v: &DVector<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_matrix(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()), path)
}

/// Reads zero-based sensor indices, one per line. Blank lines and `#` comments are skipped.
pub fn read_sensors(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            l.trim()
                .parse()
                .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))
        })
        .collect()
}

pub fn write_sensors(indices: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text: String = indices.iter().map(|i| format!("{i}\n")).collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
