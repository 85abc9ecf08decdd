//! CRD1 scorer model format.
//!
//! `magic "CRD1" | d: u32 | lambda: f64 | d·d f64 row-major | crc32: u32`,
//! little-endian, with the CRC-32 (IEEE) taken over every preceding byte.
//! The file length depends on `d` only.

use std::path::Path;

use nalgebra::DMatrix;

use crate::crd::CrdScorer;
use crate::error::{Error, Result};
use crate::io::{read_all, write_atomic, Reader};

pub const MODEL_MAGIC: &[u8; 4] = b"CRD1";
const FIXED_LEN: usize = 4 + 4 + 8 + 4;

/// Byte length of a stored model of dimension `d`.
pub fn model_file_len(d: usize) -> usize {
    FIXED_LEN + 8 * d * d
}

pub fn save_model(path: impl AsRef<Path>, scorer: &CrdScorer) -> Result<()> {
    let path = path.as_ref();
    let d = scorer.dim();
    let m = scorer.matrix();
    let mut buf = Vec::with_capacity(model_file_len(d));
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&(d as u32).to_le_bytes());
    buf.extend_from_slice(&scorer.lambda().to_le_bytes());
    for i in 0..d {
        for j in 0..d {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    write_atomic(path, &buf)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CrdScorer> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    if bytes.len() < FIXED_LEN {
        return Err(Error::format(path, format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MODEL_MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic {:?}, expected \"CRD1\"", String::from_utf8_lossy(&bytes[..4])),
        ));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum {
            path: path.to_path_buf(),
            stored,
            computed,
        });
    }

    let mut r = Reader::new(&body[4..]);
    let d = r.u32().unwrap() as usize;
    let lambda = r.f64().unwrap();
    if bytes.len() != model_file_len(d) {
        return Err(Error::format(
            path,
            format!("length {} does not match d={d} ({} bytes)", bytes.len(), model_file_len(d)),
        ));
    }
    let values: Vec<f64> = (0..d * d).map(|_| r.f64().unwrap()).collect();
    let matrix = DMatrix::from_row_slice(d, d, &values);
    CrdScorer::from_parts(lambda, matrix, None)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}
