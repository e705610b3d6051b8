// SPDX-License-Identifier: Apache-2.0
//! Weight containers.
//!
//! A container is one ASCII header line `rows cols dtype\n` followed by the
//! row-major payload in little-endian byte order. Only `f32` is defined.

use std::fs;
use std::io::Write;
use std::path::Path;

use spartan_core::WeightMatrix;

use crate::error::{Error, Result};

pub const DTYPE: &str = "f32";

/// Parses a container held in memory. Trailing or missing payload bytes are
/// errors.
pub fn parse_matrix(bytes: &[u8]) -> Result<WeightMatrix> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Container("no header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::Container("header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    let [rows, cols, dtype] = fields[..] else {
        return Err(Error::Container(format!("header `{header}` is not `rows cols dtype`")));
    };
    let dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Container(format!("bad dimension `{s}`")))
    };
    let (rows, cols) = (dim(rows)?, dim(cols)?);
    if dtype != DTYPE {
        return Err(Error::Container(format!("unsupported dtype `{dtype}`")));
    }
    let payload = &bytes[nl + 1..];
    let want = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Container("dimensions overflow".into()))?;
    if payload.len() != want {
        return Err(Error::Container(format!(
            "payload is {} bytes, header {rows}x{cols} {DTYPE} needs {want}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(WeightMatrix::new(rows, cols, values)?)
}

pub fn matrix_bytes(w: &WeightMatrix) -> Vec<u8> {
    let mut out = format!("{} {} {DTYPE}\n", w.rows(), w.cols()).into_bytes();
    out.reserve(w.values().len() * 4);
    for v in w.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<WeightMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&bytes).map_err(|e| match e {
        Error::Container(msg) => Error::Container(format!("{}: {msg}", path.display())),
        e => e,
    })
}

pub fn write_matrix(path: impl AsRef<Path>, w: &WeightMatrix) -> Result<()> {
    write_bytes(path.as_ref(), &matrix_bytes(w))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
