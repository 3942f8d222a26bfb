use nalgebra::{DMatrix, DVector};

use crate::domain::Grid1D;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 3;

/// Unscaled k-fold forward difference with zero extension.
///
/// Maps `n` interior values to `n + k` values at level `k`; the entry with
/// index `e` sits at `(e + 1 − k/2)·h`.
#[derive(Debug, Clone)]
pub struct DifferenceOperator {
    order: usize,
    h: f64,
    matrix: DMatrix<f64>,
}

impl DifferenceOperator {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Integer stencil matrix of size `(n+k) × n`.
    pub fn unscaled(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The difference quotient matrix `D_k / h^k`.
    pub fn scaled(&self) -> DMatrix<f64> {
        &self.matrix / self.h.powi(self.order as i32)
    }

    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.matrix * f / self.h.powi(self.order as i32)
    }
}

pub fn difference_matrix(grid: &Grid1D, k: usize) -> Result<DifferenceOperator> {
    if k > MAX_ORDER {
        return Err(Error::Unsupported(format!("difference order {k} exceeds the cap {MAX_ORDER}")));
    }
    let n = grid.n_interior();
    let mut m = DMatrix::identity(n, n);
    for level in 0..k {
        m = forward_difference(n + level) * m;
    }
    Ok(DifferenceOperator { order: k, h: grid.h(), matrix: m })
}

/// `(len+1) × len` forward difference with zero padding on both sides.
pub fn forward_difference(len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len + 1, len, |e, j| {
        if e == j {
            1.0
        } else if e == j + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// `(len+1) × len` two-point average with zero padding on both sides.
pub fn averaging(len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len + 1, len, |e, j| if e == j || e == j + 1 { 0.5 } else { 0.0 })
}

/// Positions of the `n + level` entries produced at a given level.
pub fn level_positions(grid: &Grid1D, level: usize) -> Vec<f64> {
    let h = grid.h();
    (0..grid.n_interior() + level).map(|e| (e as f64 + 1.0 - level as f64 / 2.0) * h).collect()
}

/// Unscaled `A^{top−k} D_k`, taking interior values to level `top`.
pub fn lifted_difference(grid: &Grid1D, k: usize, top: usize) -> Result<DMatrix<f64>> {
    let mut m = difference_matrix(grid, k)?.matrix;
    let n = grid.n_interior();
    for level in k..top {
        m = averaging(n + level) * m;
    }
    Ok(m)
}

/// Zero-extended forward difference of a vector (unscaled).
pub fn diff_vec<T>(g: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + Default,
{
    let z = T::default();
    (0..=g.len())
        .map(|e| {
            let a = if e < g.len() { g[e] } else { z };
            let b = if e > 0 { g[e - 1] } else { z };
            a - b
        })
        .collect()
}

/// Zero-extended two-point average of a vector.
pub fn avg_vec<T>(g: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let z = T::default();
    (0..=g.len())
        .map(|e| {
            let a = if e < g.len() { g[e] } else { z };
            let b = if e > 0 { g[e - 1] } else { z };
            (a + b) * 0.5
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigh;

    #[test]
    fn forward_difference_pads_with_zeros() {
        let g = Grid1D::new(4.0, 3).unwrap();
        let d = difference_matrix(&g, 1).unwrap();
        let f = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(d.apply(&f).as_slice(), &[1.0, 1.0, 1.0, -3.0]);
        assert_eq!(diff_vec(&[1.0, 2.0, 3.0]), vec![1.0, 1.0, 1.0, -3.0]);
    }

    #[test]
    fn zeroth_order_is_identity() {
        let g = Grid1D::new(1.0, 5).unwrap();
        let d = difference_matrix(&g, 0).unwrap();
        let f = DVector::from_fn(5, |i, _| i as f64 * 0.3 - 1.0);
        assert_eq!(d.apply(&f), f);
        assert!(difference_matrix(&g, 4).is_err());
    }

    #[test]
    fn first_order_gram_spectrum() {
        let g = Grid1D::new(4.0, 3).unwrap();
        let d = difference_matrix(&g, 1).unwrap();
        let gram = d.unscaled().transpose() * d.unscaled();
        let e = eigh(&gram).unwrap();
        let s2 = 2f64.sqrt();
        for (got, want) in e.values.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn difference_and_average_commute() {
        let g = Grid1D::new(1.0, 6).unwrap();
        let a = lifted_difference(&g, 1, 2).unwrap();
        let b = forward_difference(7) * averaging(6);
        assert!((a - b).abs().max() < 1e-15);
    }

    #[test]
    fn level_positions_are_staggered() {
        let g = Grid1D::new(1.0, 3).unwrap();
        let p1 = level_positions(&g, 1);
        assert_eq!(p1.len(), 4);
        assert!((p1[0] - 0.125).abs() < 1e-15 && (p1[3] - 0.875).abs() < 1e-15);
        let p2 = level_positions(&g, 2);
        assert!((p2[0]).abs() < 1e-15 && (p2[4] - 1.0).abs() < 1e-15);
    }
}
