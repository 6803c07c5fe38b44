//! Symmetric eigendecomposition.
//!
//! Backed by faer's self-adjoint solver, which runs sequentially here and is
//! therefore deterministic for a given input. Eigenvalues come back in
//! ascending order and each eigenvector is sign-normalized so that its first
//! component with magnitude above [`SIGN_TOL`] is positive.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::graph::{check_symmetric, EigenvalueVector};

/// Magnitude below which a component is ignored when fixing eigenvector signs.
pub const SIGN_TOL: f64 = 1e-10;

/// Ascending eigenvalues with matching unit eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SpectralSummary {
    pub values: EigenvalueVector,
    pub vectors: Mat<f64>,
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(m: MatRef<'_, f64>) -> Result<SpectralSummary> {
    check_symmetric(m)?;
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..m.nrows()).map(|k| s[k]).collect();
    let mut vectors = evd.U().to_owned();
    normalize_signs(&mut vectors);
    Ok(SpectralSummary {
        values: EigenvalueVector::new(values)?,
        vectors,
    })
}

/// Eigenvalues only; cheaper than [`sym_eig`].
pub fn sym_eigvals(m: MatRef<'_, f64>) -> Result<EigenvalueVector> {
    check_symmetric(m)?;
    let mut values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    // The solver already sorts; this guards against -0.0 / NaN ordering quirks.
    values.sort_by(f64::total_cmp);
    EigenvalueVector::new(values)
}

fn normalize_signs(v: &mut Mat<f64>) {
    for k in 0..v.ncols() {
        let lead = (0..v.nrows())
            .map(|i| v[(i, k)])
            .find(|x| x.abs() > SIGN_TOL);
        if matches!(lead, Some(x) if x < 0.0) {
            for i in 0..v.nrows() {
                v[(i, k)] = -v[(i, k)];
            }
        }
    }
}
