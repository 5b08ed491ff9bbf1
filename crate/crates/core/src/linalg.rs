//! Dense symmetric matrices and the handful of operations the bandit
//! machinery needs on them: rank-one Gram updates, inverse and inverse
//! square root via eigendecomposition, and Mahalanobis-type norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Eigenvalues at or below this are treated as singular.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Quadratic forms more negative than this are reported as errors rather
/// than clamped.
const NEGATIVE_QF_TOL: f64 = 1e-12;

/// A square matrix whose entries are stored symmetrically.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Builds from an arbitrary square matrix by averaging it with its
    /// transpose, which makes the stored entries exactly symmetric.
    pub fn symmetrize(m: DMatrix<f64>) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(Self(out))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `x^T M x`.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            let mut col = 0.0;
            for i in 0..n {
                col += self.0[(i, j)] * x[i];
            }
            acc += col * x[j];
        }
        acc
    }

    /// Bilinear form `x^T M y`.
    pub fn bilinear(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * y))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.0.clone()).eigenvalues
    }
}

/// Returns `V + a a^T`.
pub fn rank1_update(v: &SymMatrix, a: &DVector<f64>) -> Result<SymMatrix> {
    check_dim(v.dim(), a.len())?;
    let n = v.dim();
    let mut out = v.0.clone();
    for i in 0..n {
        for j in i..n {
            let val = v.0[(i, j)] + a[i] * a[j];
            out[(i, j)] = val;
            out[(j, i)] = val;
        }
    }
    Ok(SymMatrix(out))
}

/// Spectral quantities derived from a positive definite matrix in one
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct InverseFactors {
    pub inv: SymMatrix,
    pub inv_sqrt: SymMatrix,
    pub log_det: f64,
    pub min_eigenvalue: f64,
}

pub fn inverse_factors(v: &SymMatrix) -> Result<InverseFactors> {
    let eig = SymmetricEigen::new(v.0.clone());
    let min_eigenvalue = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min_eigenvalue > EIGEN_FLOOR) {
        return Err(Error::Singular { min_eigenvalue });
    }
    let q = &eig.eigenvectors;
    let inv_diag = eig.eigenvalues.map(|l| 1.0 / l);
    let inv_sqrt_diag = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let inv = q * DMatrix::from_diagonal(&inv_diag) * q.transpose();
    let inv_sqrt = q * DMatrix::from_diagonal(&inv_sqrt_diag) * q.transpose();
    let log_det = eig.eigenvalues.iter().map(|l| l.ln()).sum();
    Ok(InverseFactors {
        inv: SymMatrix::symmetrize(inv)?,
        inv_sqrt: SymMatrix::symmetrize(inv_sqrt)?,
        log_det,
        min_eigenvalue,
    })
}

/// Returns `(V^{-1}, V^{-1/2})`.
pub fn inv_and_inv_sqrt(v: &SymMatrix) -> Result<(SymMatrix, SymMatrix)> {
    let f = inverse_factors(v)?;
    Ok((f.inv, f.inv_sqrt))
}

/// `sqrt(a^T V^{-1} a)`, given `V^{-1}`.
pub fn mahalanobis(a: &DVector<f64>, v_inv: &SymMatrix) -> Result<f64> {
    check_dim(v_inv.dim(), a.len())?;
    let q = v_inv.quad_form(a);
    if q < -NEGATIVE_QF_TOL {
        return Err(Error::NegativeQuadraticForm(q));
    }
    Ok(q.max(0.0).sqrt())
}
