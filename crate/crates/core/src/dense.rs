//! Small dense symmetric eigenproblems.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Eigenvalues in nondecreasing order; eigenvectors are the columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn to_mat(rows: &[Vec<f64>]) -> Mat<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

/// Eigen-decomposition of a symmetric matrix (only the lower triangle is read).
pub fn sym_eigen(a: &Mat<f64>) -> Result<SymEigen> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Singular(format!("dense eigensolver failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok(SymEigen { values, vectors: evd.U().to_owned() })
}

/// `A x = lambda B x` with `B` symmetric positive definite; eigenvectors are
/// `B`-orthonormal.
pub fn generalized_sym_eigen(a: &Mat<f64>, b: &Mat<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    let eb = sym_eigen(b)?;
    let smallest = eb.values.first().copied().unwrap_or(1.0);
    if !(smallest > 0.0) {
        return Err(Error::Singular(format!("mass matrix is not positive definite (eigenvalue {smallest:e})")));
    }
    // W = B^(-1/2)
    let mut qs = eb.vectors.clone();
    for j in 0..n {
        let s = 1.0 / eb.values[j].sqrt();
        for i in 0..n {
            qs[(i, j)] *= s;
        }
    }
    let w = &qs * eb.vectors.transpose();
    let c = &w * a * &w;
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let ec = sym_eigen(&c)?;
    Ok(SymEigen { values: ec.values, vectors: &w * &ec.vectors })
}
