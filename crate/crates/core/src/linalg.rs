//! Guarded symmetric eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// `SymmetricEigen` of `m`, retried on `m + cI` if the first attempt
/// produces non-finite values. nalgebra's implicit QR occasionally returns
/// NaN for reducible matrices with many zero rows (sparse graph
/// Laplacians); a diagonal shift leaves the eigenvectors unchanged and moves
/// the iteration off the degenerate path.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !m.iter().all(|t| t.is_finite()) {
        return Err(Error::NonFinite("eigendecomposition input".into()));
    }
    let first = m.clone().symmetric_eigen();
    if is_finite(&first) {
        return Ok(first);
    }
    let n = m.nrows();
    let c = 1.0 + m.amax();
    let mut shifted = (m + DMatrix::identity(n, n) * c).symmetric_eigen();
    if !is_finite(&shifted) {
        return Err(Error::NonFinite("symmetric eigendecomposition".into()));
    }
    shifted.eigenvalues.add_scalar_mut(-c);
    Ok(shifted)
}

fn is_finite(e: &SymmetricEigen<f64, nalgebra::Dyn>) -> bool {
    e.eigenvalues.iter().chain(e.eigenvectors.iter()).all(|t| t.is_finite())
}
