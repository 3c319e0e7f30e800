//! Binary grid files.
//!
//! `.sgm` (score grid): `"SGM1\n"`, then `"H W C\n"` in ASCII decimal, then
//! `H·W·C` little-endian `f32`, pixel-major with the channels of a pixel
//! contiguous.
//!
//! `.lbm` (label map): `"LBM1\n"`, then `"H W\n"`, then `H·W` little-endian
//! `u32`, row-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{LabelGrid, ScoreGrid};

const SGM_MAGIC: &[u8] = b"SGM1\n";
const LBM_MAGIC: &[u8] = b"LBM1\n";

pub fn encode_sgm(grid: &ScoreGrid) -> Vec<u8> {
    let header = format!("{} {} {}\n", grid.height(), grid.width(), grid.channels());
    let mut out = Vec::with_capacity(SGM_MAGIC.len() + header.len() + grid.values().len() * 4);
    out.extend_from_slice(SGM_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for v in grid.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_sgm(bytes: &[u8]) -> Result<ScoreGrid> {
    let rest = strip_magic(bytes, SGM_MAGIC)?;
    let (dims, payload) = read_header(rest, 3)?;
    let (h, w, c) = (dims[0], dims[1], dims[2]);
    let count = checked_count(&[h, w, c])?;
    check_payload(payload, count)?;
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("score payload contains non-finite values".into()));
    }
    ScoreGrid::new(h, w, c, values)
}

pub fn encode_lbm(grid: &LabelGrid) -> Vec<u8> {
    let header = format!("{} {}\n", grid.height, grid.width);
    let mut out = Vec::with_capacity(LBM_MAGIC.len() + header.len() + grid.values.len() * 4);
    out.extend_from_slice(LBM_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for v in &grid.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_lbm(bytes: &[u8]) -> Result<LabelGrid> {
    let rest = strip_magic(bytes, LBM_MAGIC)?;
    let (dims, payload) = read_header(rest, 2)?;
    let count = checked_count(&dims)?;
    check_payload(payload, count)?;
    let values = payload
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    LabelGrid::new(dims[0], dims[1], values)
}

pub fn read_sgm(path: impl AsRef<Path>) -> Result<ScoreGrid> {
    decode_sgm(&fs::read(path)?)
}

pub fn write_sgm(path: impl AsRef<Path>, grid: &ScoreGrid) -> Result<()> {
    Ok(fs::write(path, encode_sgm(grid))?)
}

pub fn read_lbm(path: impl AsRef<Path>) -> Result<LabelGrid> {
    decode_lbm(&fs::read(path)?)
}

pub fn write_lbm(path: impl AsRef<Path>, grid: &LabelGrid) -> Result<()> {
    Ok(fs::write(path, encode_lbm(grid))?)
}

fn strip_magic<'a>(bytes: &'a [u8], magic: &[u8]) -> Result<&'a [u8]> {
    bytes.strip_prefix(magic).ok_or_else(|| {
        Error::Format(format!("bad magic, expected {:?}", String::from_utf8_lossy(magic)))
    })
}

fn read_header(bytes: &[u8], fields: usize) -> Result<(Vec<usize>, &[u8])> {
    let end = bytes
        .iter()
        .take(64)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let line = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::Format("header is not ASCII".into()))?;
    let dims: Vec<usize> = line
        .split(' ')
        .map(|t| {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::Format(format!("bad header field {t:?}")));
            }
            t.parse().map_err(|_| Error::Format(format!("bad header field {t:?}")))
        })
        .collect::<Result<_>>()?;
    if dims.len() != fields {
        return Err(Error::Format(format!("header needs {fields} fields, got {line:?}")));
    }
    Ok((dims, &bytes[end + 1..]))
}

fn checked_count(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(4).map(|_| n))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))
}

fn check_payload(payload: &[u8], count: usize) -> Result<()> {
    if payload.len() != count * 4 {
        return Err(Error::Format(format!(
            "payload is {} bytes, header requires {}",
            payload.len(),
            count * 4
        )));
    }
    Ok(())
}
