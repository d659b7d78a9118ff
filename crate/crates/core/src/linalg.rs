//! Dense decompositions backed by LAPACK.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, SVD, UPLO};

use crate::error::{Error, Result};
use crate::hilbert::C64;

fn to_array(m: &DMatrix<C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()).f(), |(r, c)| m[(r, c)])
}

fn from_array(a: &Array2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)])
}

/// Thin SVD `m = U diag(s) Vᴴ` with `s` descending. Returns `U` (m×r),
/// `s` and `Vᴴ` (r×n) for `r = min(m, n)`.
pub(crate) fn svd(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Err(Error::dims("SVD of an empty matrix"));
    }
    let (u, s, vt) = to_array(m).svd(true, true).map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    let u = from_array(&u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?);
    let vt = from_array(&vt.ok_or_else(|| Error::Numerical("SVD did not return V^H".into()))?);
    Ok((u.columns(0, r).into_owned(), s.to_vec(), vt.rows(0, r).into_owned()))
}

pub(crate) fn singular_values(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    Ok(svd(m)?.1)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix;
/// only the lower triangle is read.
pub(crate) fn eigh(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::dims(format!("eigenproblem of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let (vals, vecs) =
        to_array(m).eigh(UPLO::Lower).map_err(|e| Error::Numerical(format!("eigensolver failed: {e}")))?;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    Ok((vals.to_vec(), from_array(&vecs)))
}

pub(crate) fn column(m: &DMatrix<C64>, i: usize) -> DVector<C64> {
    m.column(i).into_owned()
}
