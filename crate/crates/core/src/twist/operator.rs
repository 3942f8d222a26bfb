use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::domain::Grid1D;
use crate::error::{Error, Result};
use crate::spectral::eigh;

/// Largest admissible |λ|·L before e^{λψ} leaves comfortable double range.
pub const TWIST_CAP: f64 = 40.0;

/// Affine weight ψ(x) = (x − x0)·a and twist strength λ.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistSpec {
    grid: Grid1D,
    x0: f64,
    direction: f64,
    lambda: f64,
    psi: Vec<f64>,
}

impl TwistSpec {
    pub fn new(grid: &Grid1D, x0: f64, direction: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=grid.length()).contains(&x0) {
            return Err(Error::Parameter(format!("base point {x0} lies outside [0, {}]", grid.length())));
        }
        if direction != 1.0 && direction != -1.0 {
            return Err(Error::Parameter(format!("direction must be ±1, got {direction}")));
        }
        if !lambda.is_finite() {
            return Err(Error::Parameter("twist strength must be finite".into()));
        }
        let psi = grid.points().into_iter().map(|x| (x - x0) * direction).collect();
        Ok(Self { grid: *grid, x0, direction, lambda, psi })
    }

    /// Twist centred on the domain with positive direction.
    pub fn centered(grid: &Grid1D, lambda: f64) -> Result<Self> {
        Self::new(grid, grid.length() / 2.0, 1.0, lambda)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(&self.grid, self.x0, self.direction, lambda)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn direction(&self) -> f64 {
        self.direction
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn check_conditioning(&self) -> Result<()> {
        let v = self.lambda.abs() * self.grid.length();
        if v > TWIST_CAP {
            return Err(Error::Conditioning(format!("|λ|·L = {v:.3} exceeds the cap {TWIST_CAP}")));
        }
        Ok(())
    }

    /// Diagonal of E = diag(e^{λψ}).
    pub fn weights(&self) -> Vec<f64> {
        self.psi.iter().map(|p| (self.lambda * p).exp()).collect()
    }

    pub fn inverse_weights(&self) -> Vec<f64> {
        self.psi.iter().map(|p| (-self.lambda * p).exp()).collect()
    }

    /// e^{λ(ψ(x_j) − ψ(x_i))}, computed from the point separation only.
    pub fn factor(&self, i: usize, j: usize) -> f64 {
        let sep = (j as f64 - i as f64) * self.grid.h();
        (self.lambda * self.direction * sep).exp()
    }

    pub fn apply_e(&self, f: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(f.len(), f.iter().zip(&self.psi).map(|(v, p)| v * (self.lambda * p).exp()))
    }

    pub fn apply_e_inv(&self, f: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(f.len(), f.iter().zip(&self.psi).map(|(v, p)| v * (-self.lambda * p).exp()))
    }

    pub fn apply_e_complex(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(f.len(), f.iter().zip(&self.psi).map(|(v, p)| v * (self.lambda * p).exp()))
    }

    pub fn apply_e_inv_complex(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(f.len(), f.iter().zip(&self.psi).map(|(v, p)| v * (-self.lambda * p).exp()))
    }
}

/// H_λ = E^{−1} H E for an operator matrix H.
#[derive(Debug, Clone)]
pub struct TwistedOperator {
    base: DMatrix<f64>,
    matrix: DMatrix<f64>,
    twist: TwistSpec,
    gap: Option<(f64, usize)>,
}

pub fn conjugate(m: &DMatrix<f64>, tw: &TwistSpec) -> Result<TwistedOperator> {
    tw.check_conditioning()?;
    let n = tw.grid().n_interior();
    if m.shape() != (n, n) {
        return Err(Error::Contract(format!("matrix shape {:?} does not match the twist grid", m.shape())));
    }
    let matrix = if tw.lambda() == 0.0 { m.clone() } else { DMatrix::from_fn(n, n, |i, j| m[(i, j)] * tw.factor(i, j)) };
    Ok(TwistedOperator { base: m.clone(), matrix, twist: tw.clone(), gap: None })
}

impl TwistedOperator {
    /// Records the spectral gap s and order m used by shifted quantities.
    pub fn with_gap(mut self, s: f64, m: usize) -> Self {
        self.gap = Some((s, m));
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn twist(&self) -> &TwistSpec {
        &self.twist
    }

    pub fn gap(&self) -> Result<(f64, usize)> {
        self.gap.ok_or_else(|| Error::Contract("twisted operator has no recorded spectral gap".into()))
    }

    /// Ĥ_λ = H_λ − s.
    pub fn shifted(&self) -> Result<DMatrix<f64>> {
        let (s, _) = self.gap()?;
        let n = self.matrix.nrows();
        Ok(&self.matrix - DMatrix::identity(n, n) * s)
    }

    /// H_λ f for complex f.
    pub fn apply_complex(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        let re = &self.matrix * f.map(|z| z.re);
        let im = &self.matrix * f.map(|z| z.im);
        re.zip_map(&im, Complex64::new)
    }

    /// Undoes the twist by symmetrization, S_ij = sign(H_ij)·sqrt(H_ij·H_ji).
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let n = self.matrix.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            let a = self.matrix[(i, j)];
            let b = self.matrix[(j, i)];
            if i == j {
                a
            } else {
                a.signum() * (a * b).abs().sqrt()
            }
        })
    }

    /// max_k |λ_k(H_λ) − λ_k(H)| / max_k |λ_k(H)| with both spectra from eigh.
    pub fn spectrum_error(&self, reference: &[f64]) -> Result<f64> {
        let twisted = eigh(&self.symmetrized())?.values;
        if twisted.len() != reference.len() {
            return Err(Error::Contract("spectrum lengths differ".into()));
        }
        let scale = reference.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(twisted.iter().zip(reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_form, OperatorSpec};

    fn base(n: usize) -> (Grid1D, DMatrix<f64>) {
        let g = Grid1D::new(std::f64::consts::PI, n).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap();
        (g, q.operator())
    }

    #[test]
    fn zero_twist_is_identity() {
        let (g, h) = base(20);
        let op = conjugate(&h, &TwistSpec::new(&g, 1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(op.matrix(), &h);
    }

    #[test]
    fn base_point_does_not_matter() {
        let (g, h) = base(20);
        let a = conjugate(&h, &TwistSpec::new(&g, 0.2, 1.0, 1.3).unwrap()).unwrap();
        let b = conjugate(&h, &TwistSpec::new(&g, 2.9, 1.0, 1.3).unwrap()).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = conjugate(&h, &TwistSpec::new(&g, 0.2, -1.0, -1.3).unwrap()).unwrap();
        assert_eq!(a.matrix(), c.matrix());
    }

    #[test]
    fn spectrum_is_preserved() {
        let (g, h) = base(40);
        let reference = eigh(&h).unwrap().values;
        let op = conjugate(&h, &TwistSpec::centered(&g, 2.0).unwrap()).unwrap();
        assert!(op.spectrum_error(&reference).unwrap() < 1e-8);
        let psi = op.twist().psi();
        assert!((psi[5] - psi[2] - 3.0 * g.h()).abs() < 1e-14);
    }

    #[test]
    fn cap_and_parameters() {
        let (g, h) = base(10);
        assert!(matches!(conjugate(&h, &TwistSpec::centered(&g, 13.0).unwrap()), Err(Error::Conditioning(_))));
        assert!(TwistSpec::new(&g, -1.0, 1.0, 1.0).is_err());
        assert!(TwistSpec::new(&g, 1.0, 0.5, 1.0).is_err());
    }
}
