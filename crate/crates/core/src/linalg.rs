use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Cholesky factorization with a diagonal jitter ladder.
///
/// Tries the matrix as given, then adds `lambda * mean(diag)` for
/// `lambda = 1e-10, 1e-9, ..., 1e-4` until the factorization succeeds.
pub(crate) fn jittered_cholesky(mut m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance matrix"));
    }
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(chol);
    }
    let mean_diag = m.diagonal().mean();
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut lambda = JITTER_START;
    let mut applied = 0.0;
    while lambda <= JITTER_MAX * (1.0 + 1e-9) {
        let add = lambda * scale - applied;
        for i in 0..n {
            m[(i, i)] += add;
        }
        applied = lambda * scale;
        if let Some(chol) = Cholesky::new(m.clone()) {
            return Ok(chol);
        }
        lambda *= 10.0;
    }
    Err(Error::SingularCovariance)
}

/// `log det` of the factorized matrix.
pub(crate) fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Minimum-norm least-squares solution; singular values below
/// `1e-10 * largest` are treated as zero.
pub(crate) fn min_norm_lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    if max_sv <= 0.0 {
        return DVector::zeros(x.ncols());
    }
    let eps = 1e-10 * max_sv;
    svd.solve(y, eps)
        .unwrap_or_else(|_| DVector::zeros(x.ncols()))
}
