use nalgebra::{DMatrix, DVector};

use super::jacobi::eigh;
use crate::error::{Error, Result};

/// Largest eigenpair of a symmetric operator given by its action.
///
/// Lanczos with full reorthogonalization; returns the top Ritz pair after at
/// most `steps` iterations.
pub fn top_eigenpair<F>(start: DVector<f64>, steps: usize, matvec: F) -> Result<(f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = start.len();
    let norm = start.norm();
    if n == 0 || norm == 0.0 || !norm.is_finite() {
        return Err(Error::Domain("Lanczos needs a nonzero start vector".into()));
    }
    let steps = steps.clamp(1, n);
    let mut basis: Vec<DVector<f64>> = vec![start / norm];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut w = matvec(&basis[k]);
        alpha.push(basis[k].dot(&w));
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();
        if k + 1 == steps || b <= 1e-13 * alpha.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE) {
            break;
        }
        beta.push(b);
        basis.push(w / b);
    }
    let r = alpha.len();
    let t = DMatrix::from_fn(r, r, |i, j| {
        if i == j {
            alpha[i]
        } else if i.abs_diff(j) == 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let e = eigh(&t)?;
    let top = e.values[r - 1];
    let y = e.vectors.column(r - 1);
    let mut v = DVector::zeros(n);
    for (k, q) in basis.iter().take(r).enumerate() {
        v.axpy(y[k], q, 1.0);
    }
    let nv = v.norm();
    Ok((top, v / nv))
}
