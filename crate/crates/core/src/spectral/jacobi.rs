use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
const REL_TOL: f64 = 1e-14;

/// Eigenvalues in ascending order with matching orthonormal columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigensolver for real symmetric matrices.
///
/// A pair is rotated away whenever `|a_pq| > 1e-14·sqrt(|a_pp·a_qq|)`, so on
/// exit every off-diagonal entry is below `1e-12·‖M‖_F` and small
/// eigenvalues of graded matrices keep their relative accuracy.
pub fn eigh(m: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Contract(format!("eigh needs a square matrix, got {:?}", m.shape())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("eigh input has non-finite entries".into()));
    }
    let fro = m.norm();
    let mut asym = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            asym += 2.0 * (m[(i, j)] - m[(j, i)]).powi(2);
        }
    }
    if asym.sqrt() > 1e-10 * fro {
        return Err(Error::Contract(format!("eigh input is not symmetric: ‖M − Mᵀ‖ = {:.3e}, ‖M‖ = {fro:.3e}", asym.sqrt())));
    }

    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    // Rows of `v` are the eigenvectors.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq.abs() <= REL_TOL * (app.abs().sqrt() * aqq.abs().sqrt()) || apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t =
                    if theta.abs() > 1e150 { 0.5 / theta } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[k * n + p] = np;
                    a[p * n + k] = np;
                    a[k * n + q] = nq;
                    a[q * n + k] = nq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                let (vp, vq) = rows_mut(&mut v, n, p, q);
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps >= MAX_SWEEPS {
            return Err(Error::Numerical(format!("Jacobi did not converge in {MAX_SWEEPS} sweeps")));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| v[order[k] * n + i]);
    Ok(SymmetricEigen { values, vectors, sweeps })
}

fn rows_mut(v: &mut [f64], n: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    let (head, tail) = v.split_at_mut(q * n);
    (&mut head[p * n..p * n + n], &mut tail[..n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two() {
        let e = eigh(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_and_diagonal() {
        let e = eigh(&DMatrix::identity(5, 5)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
        assert_eq!(e.vectors, DMatrix::identity(5, 5));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = eigh(&d).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.vectors.column(0).as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(e.vectors.column(1).as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(e.vectors.column(2).as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigh(&m), Err(Error::Contract(_))));
        assert!(matches!(eigh(&DMatrix::zeros(2, 3)), Err(Error::Contract(_))));
    }

    #[test]
    fn graded_matrix_keeps_small_eigenvalue() {
        // tridiag(-1,2,-1) scaled so the diagonal is 1e10; smallest eigenvalue known in closed form
        let n = 60;
        let s = 1e10;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * s
            } else if i.abs_diff(j) == 1 {
                -s
            } else {
                0.0
            }
        });
        let e = eigh(&m).unwrap();
        let exact = s * 4.0 * (std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin().powi(2);
        assert!(((e.values[0] - exact) / exact).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn reconstructs_random_symmetric(n in 1usize..20, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let m = &b + b.transpose();
            let e = eigh(&m).unwrap();
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
            let r = &e.vectors * d * e.vectors.transpose();
            prop_assert!((&r - &m).norm() <= 1e-12 * m.norm().max(1.0));
            let o = e.vectors.transpose() * &e.vectors;
            prop_assert!((o - DMatrix::identity(n, n)).abs().max() <= 1e-12);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
