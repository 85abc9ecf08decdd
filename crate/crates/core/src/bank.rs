//! In-memory feature matrices.
//!
//! Both [`FeatureBank`] and [`QueryBatch`] store one patch vector per matrix
//! column (`d × n`, column-major). This is the same byte order as the on-disk
//! row-per-patch layout, so loading is a straight copy.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let d = m.nrows();
        return Err(Error::Validation(format!(
            "{what} has non-finite value at patch {}, component {}",
            pos / d,
            pos % d
        )));
    }
    Ok(())
}

fn check_shape(d: usize, n: usize, what: &str) -> Result<()> {
    if d == 0 || n == 0 {
        return Err(Error::Validation(format!(
            "{what} must have d >= 1 and n >= 1 (got d={d}, n={n})"
        )));
    }
    Ok(())
}

/// Training patch features of normal samples, one column per patch.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBank {
    data: DMatrix<f64>,
}

impl FeatureBank {
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        check_shape(data.nrows(), data.ncols(), "feature bank")?;
        check_finite(&data, "feature bank")?;
        Ok(Self { data })
    }

    /// Builds a bank from `n` patch vectors of length `d` laid out back to back.
    pub fn from_patch_slice(d: usize, n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != d * n {
            return Err(Error::Validation(format!(
                "expected {} values for d={d}, n={n}, got {}",
                d * n,
                values.len()
            )));
        }
        Self::from_matrix(DMatrix::from_column_slice(d, n, values))
    }

    pub fn from_patches<P: AsRef<[f64]>>(patches: &[P]) -> Result<Self> {
        let d = patches.first().map_or(0, |p| p.as_ref().len());
        let mut values = Vec::with_capacity(d * patches.len());
        for (i, p) in patches.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != d {
                return Err(Error::Validation(format!(
                    "patch {i} has length {}, expected {d}",
                    p.len()
                )));
            }
            values.extend_from_slice(p);
        }
        Self::from_patch_slice(d, patches.len(), &values)
    }

    /// Stacks banks of equal dimension in order.
    pub fn concat(banks: &[FeatureBank]) -> Result<Self> {
        let Some(first) = banks.first() else {
            return Err(Error::Parameter("cannot concatenate zero banks".into()));
        };
        let d = first.dim();
        let mut values = Vec::with_capacity(d * banks.iter().map(|b| b.len()).sum::<usize>());
        for b in banks {
            if b.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: b.dim(),
                });
            }
            values.extend_from_slice(b.as_slice());
        }
        let n = values.len() / d;
        Self::from_patch_slice(d, n, &values)
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of stored patches `n`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data.as_slice()[i * d..(i + 1) * d]
    }

    pub fn patches(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.as_slice().chunks_exact(self.dim())
    }

    /// All values, patch after patch.
    pub fn as_slice(&self) -> &[f64] {
        self.data.as_slice()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn view(&self) -> DMatrixView<'_, f64> {
        self.data.as_view()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Sub-bank of the given columns, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Parameter(format!(
                "patch index {bad} out of range for bank of {n}"
            )));
        }
        Ok(Self {
            data: self.data.select_columns(indices),
        })
    }
}

/// `m` query patch vectors scored together.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryBatch {
    data: DMatrix<f64>,
}

impl QueryBatch {
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        check_shape(data.nrows(), data.ncols(), "query batch")?;
        check_finite(&data, "query batch")?;
        Ok(Self { data })
    }

    pub fn from_patches<P: AsRef<[f64]>>(patches: &[P]) -> Result<Self> {
        Ok(FeatureBank::from_patches(patches)?.into())
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn query(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.data.as_slice()[j * d..(j + 1) * d]
    }

    pub fn queries(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.as_slice().chunks_exact(self.dim())
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

impl From<FeatureBank> for QueryBatch {
    fn from(bank: FeatureBank) -> Self {
        Self { data: bank.data }
    }
}

impl From<QueryBatch> for FeatureBank {
    fn from(q: QueryBatch) -> Self {
        Self { data: q.data }
    }
}
