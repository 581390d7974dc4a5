//! Dense symmetric positive definite matrices and their Cholesky factors.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Lower-triangular Cholesky factor of `sigma`.
///
/// Only the lower triangle of `sigma` is read. Fails with
/// [`Error::NotPositiveDefinite`] on the first non-positive pivot.
pub fn cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = sigma.nrows();
    if d == 0 || sigma.ncols() != d {
        return Err(invalid("cholesky needs a non-empty square matrix"));
    }
    let mut l = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut diag = sigma[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Symmetric positive definite matrix with its cached Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if d == 0 || entries.ncols() != d {
            return Err(invalid("covariance must be a non-empty square matrix"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let chol = cholesky(&entries)?;
        Ok(Self { entries, chol })
    }

    /// Builds from rows, as read from a spec file.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("covariance rows must all have length d"));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// Covariance from standard deviations and a correlation matrix.
    pub fn from_std_corr(std: &[f64], corr: &DMatrix<f64>) -> Result<Self> {
        let d = std.len();
        if corr.nrows() != d || corr.ncols() != d {
            return Err(invalid("correlation matrix does not match std vector"));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| std[i] * std[j] * corr[(i, j)]))
    }

    pub fn identity(d: usize) -> Self {
        Self {
            entries: DMatrix::identity(d, d),
            chol: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Rows and columns rearranged so that entry `(a, b)` is `Σ[order[a], order[b]]`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let d = self.dim();
        if order.len() != d {
            return Err(invalid("reordering must list every index once"));
        }
        Self::new(DMatrix::from_fn(d, d, |a, b| self.entries[(order[a], order[b])]))
    }

    /// Solves `Σ x = b` through the cached factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut y = b.to_vec();
        for i in 0..d {
            let s = (0..i).fold(y[i], |s, k| s - self.chol[(i, k)] * y[k]);
            y[i] = s / self.chol[(i, i)];
        }
        for i in (0..d).rev() {
            let s = ((i + 1)..d).fold(y[i], |s, k| s - self.chol[(k, i)] * y[k]);
            y[i] = s / self.chol[(i, i)];
        }
        y
    }

    /// `xᵀ Σ⁻¹ x`.
    pub fn quad_form_inv(&self, x: &[f64]) -> f64 {
        let z = self.solve(x);
        x.iter().zip(&z).map(|(a, b)| a * b).sum()
    }
}

/// ‖L Lᵀ − Σ‖_F / ‖Σ‖_F.
pub fn cholesky_residual(sigma: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    let diff = l * l.transpose() - sigma;
    diff.norm() / sigma.norm()
}
