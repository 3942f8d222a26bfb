use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::jacobi::eigh;
use crate::assembly::FormMatrix;
use crate::domain::Grid1D;
use crate::error::{Error, Result};

/// Ascending spectrum of `H_h` with eigenvectors normalized in ⟨·,·⟩_h.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    grid: Grid1D,
    m: usize,
}

impl SpectralDecomposition {
    pub fn from_form(q: &FormMatrix) -> Result<Self> {
        Self::from_operator(*q.grid(), q.m(), &q.operator())
    }

    /// Decomposes an operator matrix that is symmetric in the h-weighted geometry.
    pub fn from_operator(grid: Grid1D, m: usize, op: &DMatrix<f64>) -> Result<Self> {
        if op.nrows() != grid.n_interior() {
            return Err(Error::Contract("operator size does not match the grid".into()));
        }
        let e = eigh(op)?;
        let vectors = e.vectors / grid.h().sqrt();
        Ok(Self { values: e.values, vectors, grid, m })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Columns φ_k with ⟨φ_k, φ_l⟩_h = δ_kl.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Columns √h·φ_k, orthonormal in the Euclidean sense.
    pub fn euclidean_vectors(&self) -> DMatrix<f64> {
        &self.vectors * self.grid.h().sqrt()
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spectral_gap(&self) -> Result<f64> {
        let s = self.values[0];
        if s <= 0.0 {
            return Err(Error::Positivity(format!("least eigenvalue {s:.6e} is not positive")));
        }
        Ok(s)
    }

    pub fn top(&self) -> f64 {
        *self.values.last().expect("non-empty decomposition")
    }

    /// c_k = ⟨f, φ_k⟩_h.
    pub fn coefficients(&self, f: &DVector<f64>) -> DVector<f64> {
        self.vectors.tr_mul(f) * self.grid.h()
    }

    pub fn coefficients_complex(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        let re = self.coefficients(&f.map(|z| z.re));
        let im = self.coefficients(&f.map(|z| z.im));
        re.zip_map(&im, Complex64::new)
    }

    /// Σ c_k φ_k.
    pub fn synthesize(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.vectors * c
    }

    pub fn synthesize_complex(&self, c: &DVector<Complex64>) -> DVector<Complex64> {
        let re = self.synthesize(&c.map(|z| z.re));
        let im = self.synthesize(&c.map(|z| z.im));
        re.zip_map(&im, Complex64::new)
    }

    /// max |⟨φ_k, φ_l⟩_h − δ_kl|.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.tr_mul(&self.vectors) * self.grid.h();
        (g - DMatrix::identity(self.len(), self.len())).abs().max()
    }

    /// ‖H_h − h Σ μ_k φ_k φ_kᵀ‖_F / ‖H_h‖_F with H_h = Q_h/h.
    pub fn reconstruction_error(&self, q: &FormMatrix) -> f64 {
        let mut scaled = self.vectors.clone();
        for (k, &mu) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(mu);
        }
        let r = scaled * self.vectors.transpose() * self.grid.h();
        let op = q.operator();
        (r - &op).norm() / op.norm()
    }

    /// max_k ‖Q_h φ_k − μ_k h φ_k‖ / (h·μ_n), in the h-weighted norm of the operator residual.
    pub fn eigen_residual(&self, q: &FormMatrix) -> f64 {
        let h = self.grid.h();
        let qv = q.matrix() * &self.vectors;
        let mut worst = 0.0f64;
        for (k, &mu) in self.values.iter().enumerate() {
            let r = (qv.column(k) - self.vectors.column(k) * (mu * h)) / h;
            worst = worst.max(self.grid.norm(r.as_slice()));
        }
        worst / self.top().abs()
    }
}

pub fn spectral_gap(d: &SpectralDecomposition) -> Result<f64> {
    d.spectral_gap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_form, OperatorSpec};

    #[test]
    fn laplacian_spectrum_matches_closed_form() {
        let g = Grid1D::new(std::f64::consts::PI, 60).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap();
        let d = SpectralDecomposition::from_form(&q).unwrap();
        let h = g.h();
        for (k, &mu) in d.values().iter().enumerate() {
            let exact = 4.0 / (h * h) * ((k + 1) as f64 * h / 2.0).sin().powi(2);
            assert!((mu - exact).abs() <= 1e-10 * exact);
        }
        assert!(d.orthonormality_error() <= 1e-8);
        assert!(d.reconstruction_error(&q) <= 1e-8);
        assert!(d.eigen_residual(&q) <= 1e-8);
        assert!((d.spectral_gap().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn identity_gap() {
        let g = Grid1D::new(1.0, 4).unwrap();
        let d = SpectralDecomposition::from_operator(g, 1, &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(d.spectral_gap().unwrap(), 1.0);
        let neg = SpectralDecomposition::from_operator(g, 1, &-DMatrix::identity(4, 4)).unwrap();
        assert!(matches!(neg.spectral_gap(), Err(Error::Positivity(_))));
    }

    #[test]
    fn coefficients_round_trip() {
        let g = Grid1D::new(2.0, 25).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(2).unwrap(), &g).unwrap();
        let d = SpectralDecomposition::from_form(&q).unwrap();
        let f = DVector::from_fn(25, |i, _| ((i * 7) % 5) as f64 - 2.0);
        let back = d.synthesize(&d.coefficients(&f));
        assert!((back - &f).norm() < 1e-12 * f.norm());
    }
}
