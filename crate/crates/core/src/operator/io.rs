//! Binary matrix format.
//!
//! Layout (all integers little-endian):
//!
//! | bytes   | content                                          |
//! |---------|--------------------------------------------------|
//! | 0..8    | magic `b"ROEOP\0\0\0"`                           |
//! | 8..16   | format version, `u64` (currently 1)              |
//! | 16..24  | rows, `u64`                                      |
//! | 24..32  | cols, `u64`                                      |
//! | 32..    | `rows · cols` entries, row-major, each `(re, im)` as two `f64` |

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::C64;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ROEOP\0\0\0";
pub const VERSION: u64 = 1;
const HEADER_LEN: usize = 32;

pub fn write_matrix<W: Write>(mut w: W, m: &DMatrix<C64>) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * m.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn encode_matrix(m: &DMatrix<C64>) -> Vec<u8> {
    let mut out = Vec::new();
    write_matrix(&mut out, m).expect("writing to a Vec cannot fail");
    out
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<DMatrix<C64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_matrix(&bytes)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<C64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "matrix file truncated: {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic, not a ROEOP matrix file".into()));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    let version = word(8);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported matrix format version {version}")));
    }
    let (rows, cols) = (word(16), word(24));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| Error::Format(format!("absurd matrix shape {rows}x{cols}")))?;
    if bytes.len() as u64 != expected {
        return Err(Error::Format(format!(
            "matrix {rows}x{cols} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let f = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        let k = HEADER_LEN + 16 * (i * cols + j);
        C64::new(f(k), f(k + 8))
    }))
}
