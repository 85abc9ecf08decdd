//! Collaborative representation distance.
//!
//! The score of a query `y` against a bank `F` is the squared residual of the
//! ridge reconstruction of `y` over all bank columns:
//!
//! ```text
//! rho    = (FᵀF + λI)⁻¹ Fᵀ y
//! score  = ‖F rho − y‖²  =  ‖M y‖²,   M = F(FᵀF + λI)⁻¹Fᵀ − I
//! ```
//!
//! `M` depends only on the bank, so it is computed once. Through the identity
//! `F(FᵀF + λI)⁻¹Fᵀ = G(G + λI)⁻¹` with `G = FFᵀ`, building it needs a `d × d`
//! solve only, and the stored model has size `d²` whatever `n` is.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bank::{FeatureBank, QueryBatch};
use crate::error::{Error, Result};

/// Maximum tolerated `|M − Mᵀ|` entry.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Bank columns per block when accumulating the Gram matrix.
const GRAM_BLOCK: usize = 4096;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Deployed scoring model: the precomputed `d × d` matrix `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrdScorer {
    lambda: f64,
    matrix: DMatrix<f64>,
    built_from_n: Option<usize>,
}

impl CrdScorer {
    /// Wraps an existing matrix, validating shape, finiteness and symmetry.
    pub fn from_parts(lambda: f64, matrix: DMatrix<f64>, built_from_n: Option<usize>) -> Result<Self> {
        check_lambda(lambda)?;
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Validation(format!(
                "scorer matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("scorer matrix has non-finite entries".into()));
        }
        let asym = max_asymmetry(&matrix);
        if asym > SYMMETRY_TOL {
            return Err(Error::Validation(format!(
                "scorer matrix is not symmetric (max |M - Mt| = {asym:e})"
            )));
        }
        Ok(Self {
            lambda,
            matrix,
            built_from_n,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of bank columns the model was built from; unknown after loading.
    pub fn built_from_n(&self) -> Option<usize> {
        self.built_from_n
    }

    pub fn score(&self, queries: &QueryBatch) -> Result<Vec<f64>> {
        crd_score(self, queries)
    }

    /// Scores a single query vector.
    pub fn score_one(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(score_columns(&self.matrix, y, 1)[0])
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..d {
        for i in (j + 1)..d {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `G = F Fᵀ`, accumulated over column blocks so no `n`-sized temporary is formed.
pub fn gram_matrix(bank: &FeatureBank) -> DMatrix<f64> {
    let d = bank.dim();
    let n = bank.len();
    let f = bank.view();
    let mut gram = DMatrix::zeros(d, d);
    let mut start = 0;
    while start < n {
        let len = GRAM_BLOCK.min(n - start);
        let block = f.columns(start, len);
        gram.gemm(1.0, &block, &block.transpose(), 1.0);
        start += len;
    }
    gram
}

/// Precomputes `M = G(G + λI)⁻¹ − I` from the bank.
pub fn build_scorer(bank: &FeatureBank, lambda: f64) -> Result<CrdScorer> {
    check_lambda(lambda)?;
    let d = bank.dim();
    let gram = gram_matrix(bank);
    let mut shifted = gram.clone();
    for i in 0..d {
        shifted[(i, i)] += lambda;
    }
    let chol = shifted.cholesky().ok_or_else(|| {
        Error::Numerical(format!("G + lambda*I is not positive definite (lambda = {lambda})"))
    })?;
    // (G + λI)⁻¹ G equals G (G + λI)⁻¹: both are functions of G.
    let mut m = chol.solve(&gram);
    for i in 0..d {
        m[(i, i)] -= 1.0;
    }
    let m = (&m + m.transpose()) * 0.5;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("scorer matrix has non-finite entries".into()));
    }
    Ok(CrdScorer {
        lambda,
        matrix: m,
        built_from_n: Some(bank.len()),
    })
}

/// `‖M q_j‖²` for the `cols` query columns stored contiguously in `q`.
///
/// Always goes through the same GEMM kernel so a column's score does not
/// depend on how many other columns share the call.
fn score_columns(m: &DMatrix<f64>, q: &[f64], cols: usize) -> Vec<f64> {
    let d = m.nrows();
    let mut r = vec![0.0; d * cols];
    // SAFETY: all three buffers are column-major with the stated strides and
    // lengths d*d, d*cols and d*cols.
    unsafe {
        matrixmultiply::dgemm(
            d,
            d,
            cols,
            1.0,
            m.as_slice().as_ptr(),
            1,
            d as isize,
            q.as_ptr(),
            1,
            d as isize,
            0.0,
            r.as_mut_ptr(),
            1,
            d as isize,
        );
    }
    r.chunks_exact(d)
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect()
}

/// Scores every query column with one `(d × d)·(d × m)` multiply.
pub fn crd_score(scorer: &CrdScorer, queries: &QueryBatch) -> Result<Vec<f64>> {
    if queries.dim() != scorer.dim() {
        return Err(Error::DimensionMismatch {
            expected: scorer.dim(),
            got: queries.dim(),
        });
    }
    Ok(score_columns(scorer.matrix(), queries.as_matrix().as_slice(), queries.len()))
}

/// [`crd_score`] with the query columns split into blocks of `block` columns
/// scored on the current rayon pool. Each score depends on its own column
/// only, so the result does not depend on the partitioning.
pub fn crd_score_blocked(scorer: &CrdScorer, queries: &QueryBatch, block: usize) -> Result<Vec<f64>> {
    if queries.dim() != scorer.dim() {
        return Err(Error::DimensionMismatch {
            expected: scorer.dim(),
            got: queries.dim(),
        });
    }
    let d = scorer.dim();
    let block = block.max(1);
    let parts: Vec<Vec<f64>> = queries
        .as_matrix()
        .as_slice()
        .par_chunks(block * d)
        .map(|q| score_columns(scorer.matrix(), q, q.len() / d))
        .collect();
    Ok(parts.concat())
}

/// Ridge reconstruction coefficients of a query over the bank columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector {
    pub rho: Vec<f64>,
}

impl CoefVector {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

/// Solves the `n × n` ridge system `(FᵀF + λI) rho = Fᵀ y`.
///
/// This is the slow reference path; it materializes an `n × n` matrix.
pub fn solve_coefficients(bank: &FeatureBank, y: &[f64], lambda: f64) -> Result<CoefVector> {
    check_lambda(lambda)?;
    if y.len() != bank.dim() {
        return Err(Error::DimensionMismatch {
            expected: bank.dim(),
            got: y.len(),
        });
    }
    let f = bank.as_matrix();
    let n = bank.len();
    let mut a = f.tr_mul(f);
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    let rhs = f.tr_mul(&DVector::from_column_slice(y));
    let chol = a.cholesky().ok_or_else(|| {
        Error::Numerical(format!("FtF + lambda*I is not positive definite (lambda = {lambda})"))
    })?;
    let rho = chol.solve(&rhs);
    Ok(CoefVector {
        rho: rho.as_slice().to_vec(),
    })
}

/// `‖F rho − y‖²` via the explicit coefficient solve.
pub fn residual_score(bank: &FeatureBank, y: &[f64], lambda: f64) -> Result<f64> {
    let coef = solve_coefficients(bank, y, lambda)?;
    let recon = bank.as_matrix() * DVector::from_column_slice(&coef.rho);
    Ok(recon
        .iter()
        .zip(y)
        .map(|(r, v)| (r - v) * (r - v))
        .sum())
}
