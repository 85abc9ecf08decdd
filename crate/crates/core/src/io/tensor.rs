//! FTB1 feature tensor format.
//!
//! Header (33 bytes, little-endian):
//!
//! | offset | size | field                                     |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `FTB1`                              |
//! | 4      | 4    | rank, u32, always 2                       |
//! | 8      | 8    | rows `n`, u64                             |
//! | 16     | 8    | cols `d`, u64                             |
//! | 24     | 1    | dtype tag, u8, `0` = f32                  |
//! | 25     | 8    | payload length in bytes, u64 (= n·d·4)    |
//!
//! followed by `n·d` f32 values in row-major order; one row is one patch.

use std::path::Path;

use crate::bank::FeatureBank;
use crate::error::{Error, Result};
use crate::io::{read_all, write_atomic, Reader};

pub const TENSOR_MAGIC: &[u8; 4] = b"FTB1";
pub const TENSOR_HEADER_LEN: usize = 33;
const DTYPE_F32: u8 = 0;
const RANK: u32 = 2;

/// Writes an `n × d` row-major matrix as an FTB1 tensor.
pub fn write_f32_rows(path: impl AsRef<Path>, n: usize, d: usize, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if values.len() != n * d {
        return Err(Error::Validation(format!(
            "{}: {} values do not fill a {n} x {d} tensor",
            path.display(),
            values.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "{}: non-finite value at row {}, column {}",
            path.display(),
            pos / d.max(1),
            pos % d.max(1)
        )));
    }
    let payload_len = values.len() * 4;
    let mut buf = Vec::with_capacity(TENSOR_HEADER_LEN + payload_len);
    buf.extend_from_slice(TENSOR_MAGIC);
    buf.extend_from_slice(&RANK.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u64).to_le_bytes());
    buf.push(DTYPE_F32);
    buf.extend_from_slice(&(payload_len as u64).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    write_atomic(path, &buf)
}

/// Reads an FTB1 tensor, returning `(n, d, row-major values)` widened to f64.
pub fn read_f32_rows(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    let mut r = Reader::new(&bytes);
    let truncated = || Error::format(path, "truncated FTB1 header");

    let magic = r.take(4).ok_or_else(truncated)?;
    if magic != TENSOR_MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic {:?}, expected \"FTB1\"", String::from_utf8_lossy(magic)),
        ));
    }
    let rank = r.u32().ok_or_else(truncated)?;
    if rank != RANK {
        return Err(Error::format(path, format!("rank {rank} is not supported, expected 2")));
    }
    let n = r.u64().ok_or_else(truncated)?;
    let d = r.u64().ok_or_else(truncated)?;
    let dtype = r.u8().ok_or_else(truncated)?;
    if dtype != DTYPE_F32 {
        return Err(Error::format(path, format!("unknown dtype tag {dtype}")));
    }
    let payload_len = r.u64().ok_or_else(truncated)?;

    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::format(path, format!("dims [{n}, {d}] overflow")))?;
    if payload_len != expected {
        return Err(Error::format(
            path,
            format!("payload length field {payload_len} does not match dims [{n}, {d}] ({expected} bytes)"),
        ));
    }
    let remaining = r.remaining() as u64;
    if remaining < expected {
        return Err(Error::format(
            path,
            format!("truncated payload: {remaining} bytes, dims [{n}, {d}] need {expected}"),
        ));
    }
    if remaining > expected {
        return Err(Error::format(
            path,
            format!("{} trailing bytes after payload", remaining - expected),
        ));
    }

    let payload = r.take(expected as usize).ok_or_else(truncated)?;
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let d = d as usize;
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "{}: non-finite value at row {}, column {}",
            path.display(),
            pos / d,
            pos % d
        )));
    }
    Ok((n as usize, d, values))
}

pub fn write_feature_tensor(path: impl AsRef<Path>, bank: &FeatureBank) -> Result<()> {
    write_f32_rows(path, bank.len(), bank.dim(), bank.as_slice())
}

pub fn read_feature_tensor(path: impl AsRef<Path>) -> Result<FeatureBank> {
    let path = path.as_ref();
    let (n, d, values) = read_f32_rows(path)?;
    FeatureBank::from_patch_slice(d, n, &values)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}
