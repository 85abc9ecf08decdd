//! Patch-score heatmaps upsampled to image resolution.

use std::path::Path;

use crate::error::{Error, Result};
use crate::evalkit::PatchGrid;
use crate::io::{write_atomic, write_f32_rows};

/// Row-major score map.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    /// Writes the map as a `rows × cols` FTB1 tensor.
    pub fn write_ftb(&self, path: impl AsRef<Path>) -> Result<()> {
        write_f32_rows(path, self.rows, self.cols, &self.values)
    }

    /// 16-bit binary PGM with the value range mapped affinely onto 0..=65535.
    /// A constant map is written as all zeros.
    pub fn to_pgm(&self) -> Vec<u8> {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let mut buf = format!("P5\n{} {}\n65535\n", self.cols, self.rows).into_bytes();
        buf.reserve(self.values.len() * 2);
        for &v in &self.values {
            let level = if span > 0.0 {
                ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            // PGM stores 16-bit samples most significant byte first.
            buf.extend_from_slice(&level.to_be_bytes());
        }
        buf
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_pgm())
    }
}

/// Corner-aligned sample positions and weights along one axis.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            if src == 1 || dst == 1 {
                return (0, 0, 0.0);
            }
            let x = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let lo = (x.floor() as usize).min(src - 2);
            (lo, lo + 1, x - lo as f64)
        })
        .collect()
}

/// Bilinear, corner-aligned upsampling of a patch score grid.
pub fn render_heatmap(grid: PatchGrid, patch_scores: &[f64], out_rows: usize, out_cols: usize) -> Result<Heatmap> {
    if patch_scores.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: patch_scores.len(),
        });
    }
    if out_rows < grid.rows() || out_cols < grid.cols() {
        return Err(Error::Parameter(format!(
            "heatmap size {out_rows}x{out_cols} is smaller than the {}x{} patch grid",
            grid.rows(),
            grid.cols()
        )));
    }
    let w = grid.cols();
    let at = |r: usize, c: usize| patch_scores[r * w + c];
    let rows = axis_taps(grid.rows(), out_rows);
    let cols = axis_taps(grid.cols(), out_cols);
    let mut values = Vec::with_capacity(out_rows * out_cols);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            let top = at(r0, c0) * (1.0 - fx) + at(r0, c1) * fx;
            let bottom = at(r1, c0) * (1.0 - fx) + at(r1, c1) * fx;
            values.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Ok(Heatmap {
        rows: out_rows,
        cols: out_cols,
        values,
    })
}
