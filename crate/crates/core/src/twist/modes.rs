use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::eigh;

const ANGLES: usize = 180;

/// Numerical radius of R^{−1/2} P R^{−1/2} for real P and positive diagonal R.
///
/// Returns the radius and a maximizing vector c in the original coordinates, so
/// that |c* P c| / Σ r_k |c_k|² attains it.
pub fn numerical_radius(p: &DMatrix<f64>, r: &[f64]) -> Result<(f64, Vec<Complex64>)> {
    let k = p.nrows();
    if p.ncols() != k || r.len() != k || k == 0 {
        return Err(Error::Contract("numerical radius needs a square block and matching weights".into()));
    }
    if r.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("numerical radius weights must be positive".into()));
    }
    let sc: Vec<f64> = r.iter().map(|v| v.sqrt().recip()).collect();
    let m = DMatrix::from_fn(k, k, |i, j| p[(i, j)] * sc[i] * sc[j]);
    let sym = (&m + m.transpose()) * 0.5;
    let anti = (&m - m.transpose()) * 0.5;

    // Hermitian part of e^{iθ}M is cosθ·S + i sinθ·A; its real embedding is [[X, −Y], [Y, X]].
    let top_at = |theta: f64| -> Result<(f64, Vec<Complex64>)> {
        let (c, s) = (theta.cos(), theta.sin());
        let emb = DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            let (bi, ii) = (i / k, i % k);
            let (bj, jj) = (j / k, j % k);
            match (bi, bj) {
                (0, 0) | (1, 1) => c * sym[(ii, jj)],
                (0, 1) => -s * anti[(ii, jj)],
                _ => s * anti[(ii, jj)],
            }
        });
        let e = eigh(&emb)?;
        let (lo, hi) = (e.values[0], e.values[2 * k - 1]);
        let col = if hi.abs() >= lo.abs() { 2 * k - 1 } else { 0 };
        let v = e.vectors.column(col);
        let z = (0..k).map(|i| Complex64::new(v[i], v[i + k]) * sc[i]).collect();
        Ok((hi.abs().max(lo.abs()), z))
    };

    let mut best = (f64::NEG_INFINITY, 0.0);
    for a in 0..ANGLES {
        let theta = std::f64::consts::PI * a as f64 / ANGLES as f64;
        let (w, _) = top_at(theta)?;
        if w > best.0 {
            best = (w, theta);
        }
    }
    let mut step = std::f64::consts::PI / ANGLES as f64;
    let mut theta = best.1;
    for _ in 0..30 {
        step /= 2.0;
        for cand in [theta - step, theta + step] {
            let (w, _) = top_at(cand)?;
            if w > best.0 {
                best = (w, cand);
                theta = cand;
            }
        }
    }
    let (_, z) = top_at(theta)?;
    let num: Complex64 = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| z[i].conj() * p[(i, j)] * z[j]).sum();
    let den: f64 = z.iter().zip(r).map(|(c, w)| c.norm_sqr() * w).sum();
    Ok((num.norm() / den, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_block_gives_spectral_radius() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, -3.0]);
        let (w, _) = numerical_radius(&p, &[1.0, 1.0]).unwrap();
        let exact = (-1.0f64 / 2.0 - (25.0f64 / 4.0 + 1.0).sqrt()).abs();
        assert!((w - exact).abs() < 1e-10);
    }

    #[test]
    fn nilpotent_block() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let (w, z) = numerical_radius(&p, &[1.0, 1.0]).unwrap();
        assert!((w - 1.0).abs() < 1e-10);
        assert_eq!(z.len(), 2);
    }

    #[test]
    fn antisymmetric_block() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let (w, _) = numerical_radius(&p, &[4.0, 4.0]).unwrap();
        assert!((w - 0.25).abs() < 1e-10);
    }
}
