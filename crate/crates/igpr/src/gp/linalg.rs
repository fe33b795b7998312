//! Gram assembly and Cholesky with nugget escalation.

use super::{KernelSpec, TrainingSet};
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, Dyn};

/// Gram matrix K(X, X) without the noise diagonal, assembled in training-set
/// order so runs are bit-reproducible.
pub(crate) fn build_gram(train: &TrainingSet, kernel: &KernelSpec) -> Result<DMatrix<f64>> {
    let m = train.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = kernel.eval(&train.inputs()[i], &train.inputs()[j])?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Cholesky of `gram + nu * I`, escalating the diagonal by x10 on failure up
/// to `max(1e-4 * var_y, 1e-8)` before giving up. Returns the factor and the
/// noise value actually used.
pub(crate) fn cholesky_with_escalation(
    gram: &DMatrix<f64>,
    nu: f64,
    var_y: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let m = gram.nrows();
    let cap = (1e-4 * var_y).max(1e-8).max(nu);
    let mut current = nu;
    loop {
        let mut k = gram.clone();
        for i in 0..m {
            k[(i, i)] += current;
        }
        if let Some(chol) = Cholesky::new(k) {
            return Ok((chol, current));
        }
        if current >= cap {
            return Err(Error::numerical(format!(
                "Cholesky failed for {m}x{m} Gram matrix even with nugget {current:.3e} \
                 (cap {cap:.3e}); matrix is numerically indefinite"
            )));
        }
        current = (current * 10.0).min(cap);
    }
}

pub(crate) fn log_det_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    let mut sum = 0.0;
    for i in 0..l.nrows() {
        sum += l[(i, i)].ln();
    }
    2.0 * sum
}
