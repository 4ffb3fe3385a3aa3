use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::gram::GramMatrix;
use crate::error::{Error, Result};

/// Default tolerance on negative eigenvalues accepted by [`gram_to_vectors`].
pub const EPS_PSD: f64 = 1e-8;
/// Entrywise tolerance with which the factor reproduces its Gram matrix.
pub const EPS_FAC: f64 = 1e-7;

/// Vectors `{e, u_x}` realising a Gram matrix.
///
/// Row 0 of `rows` is `e`, rotated onto the first coordinate axis, so
/// `c_x = <u_x, e>` is just the first coordinate of row `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSolution {
    rows: DMatrix<f64>,
}

impl VectorSolution {
    /// Builds a solution from explicit vectors; row 0 must be a unit vector.
    pub fn from_rows(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::ZeroDimension);
        }
        let norm = rows.row(0).norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateVector(0));
        }
        Ok(Self { rows })
    }

    /// Number of vectors including `e`.
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// Embedding dimension `d`.
    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn e(&self) -> DVector<f64> {
        self.rows.row(0).transpose()
    }

    pub fn vector(&self, x: usize) -> DVector<f64> {
        self.rows.row(x).transpose()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn inner(&self, x: usize, y: usize) -> f64 {
        self.rows.row(x).dot(&self.rows.row(y))
    }

    /// `c_x = <u_x, e>`.
    pub fn c(&self, x: usize) -> f64 {
        self.inner(x, 0)
    }

    pub fn gram(&self) -> GramMatrix {
        GramMatrix::from_symmetric(&self.rows * self.rows.transpose())
    }
}

/// Factors `M = V V^T` by eigendecomposition with negative eigenvalues
/// clamped to zero, then rotates the rows so that `e` (row 0) lies on the
/// first axis and rescales it to unit length.
///
/// Fails if some eigenvalue is below `-eps_psd` or `M[0][0]` vanishes.
pub fn gram_to_vectors(m: &GramMatrix, eps_psd: f64) -> Result<VectorSolution> {
    let eig = SymmetricEigen::new(m.matrix().clone());
    let min = eig.eigenvalues.min();
    if min < -eps_psd {
        return Err(Error::NotPsd {
            eigenvalue: min,
            tolerance: eps_psd,
        });
    }
    let top = eig.eigenvalues.max();
    let cutoff = top.max(0.0) * m.dim() as f64 * f64::EPSILON;
    let kept: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&c| eig.eigenvalues[c] > cutoff)
        .collect();
    if kept.is_empty() {
        return Err(Error::DegenerateVector(0));
    }
    let dim = m.dim();
    let mut rows = DMatrix::from_fn(dim, kept.len(), |r, c| {
        let col = kept[c];
        eig.eigenvectors[(r, col)] * eig.eigenvalues[col].sqrt()
    });

    let e_norm = rows.row(0).norm();
    if e_norm < 1e-12 {
        return Err(Error::DegenerateVector(0));
    }
    // Householder reflection taking e / |e| to the first basis vector.
    let mut v: DVector<f64> = rows.row(0).transpose() / e_norm;
    v[0] -= 1.0;
    let vv = v.dot(&v);
    if vv > 1e-30 {
        let proj = &rows * &v * (2.0 / vv);
        rows -= proj * v.transpose();
    }
    rows.row_mut(0).fill(0.0);
    rows[(0, 0)] = 1.0;
    Ok(VectorSolution { rows })
}
