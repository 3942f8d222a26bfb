use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::operator::TwistedOperator;
use crate::error::{Error, Result};
use crate::sampling::complex_samples;
use crate::spectral::SpectralDecomposition;

pub const RESOLVENT_TOL: f64 = 1e-8;
pub const SPECTRUM_TOL: f64 = 1e-8;
const RHS_COUNT: usize = 10;

/// Outcome of the resolvent and spectrum identities at one z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub z: Complex64,
    /// max over right-hand sides of ‖(z−H_λ)^{−1}b − E^{−1}(z−H)^{−1}Eb‖ / ‖(z−H_λ)^{−1}b‖.
    pub resolvent_error: f64,
    pub spectrum_error: f64,
    pub distance: f64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.resolvent_error <= RESOLVENT_TOL && self.spectrum_error <= SPECTRUM_TOL
    }
}

fn shifted_complex(m: &DMatrix<f64>, z: Complex64) -> DMatrix<Complex64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| if i == j { z - m[(i, j)] } else { Complex64::new(-m[(i, j)], 0.0) })
}

/// Resolvent similarity and spectrum equality of H_λ and H at an off-spectrum z.
pub fn appendix_b_identities(d: &SpectralDecomposition, op: &TwistedOperator, z: Complex64) -> Result<IdentityReport> {
    let top = d.top().abs();
    let distance = d.values().iter().map(|&mu| (z - mu).norm()).fold(f64::INFINITY, f64::min);
    if distance < 1e-6 * top {
        return Err(Error::Conditioning(format!(
            "z = {z} lies within {distance:.3e} of the spectrum (threshold {:.3e})",
            1e-6 * top
        )));
    }
    let tw = op.twist();
    let twisted = shifted_complex(op.matrix(), z).lu();
    let plain = shifted_complex(op.base(), z).lu();
    let n = d.len();
    let mut worst = 0.0f64;
    for b in complex_samples(0xb0b, "resolvent", n, RHS_COUNT) {
        let x1: DVector<Complex64> =
            twisted.solve(&b).ok_or_else(|| Error::Numerical(format!("z − H_λ is singular at z = {z}")))?;
        let eb = tw.apply_e_complex(&b);
        let y = plain.solve(&eb).ok_or_else(|| Error::Numerical(format!("z − H is singular at z = {z}")))?;
        let x2 = tw.apply_e_inv_complex(&y);
        worst = worst.max((&x1 - &x2).norm() / x1.norm());
    }
    let spectrum_error = op.spectrum_error(d.values())?;
    Ok(IdentityReport { z, resolvent_error: worst, spectrum_error, distance })
}

/// Five off-spectrum probes meeting the distance precondition, preferring points below μ1,
/// inside the first gap and off the real axis.
pub fn probe_points(d: &SpectralDecomposition) -> Vec<Complex64> {
    let v = d.values();
    let mu1 = v[0];
    let mu2 = v.get(1).copied().unwrap_or(2.0 * mu1);
    let top = d.top().abs();
    let r = mu1.abs().max(2e-6 * top);
    let i = Complex64::i();
    let candidates = [
        Complex64::new(-mu1, 0.0),
        Complex64::new(mu1 / 2.0, 0.0),
        Complex64::new((mu1 + mu2) / 2.0, 0.0),
        Complex64::new(mu1, mu1),
        Complex64::new(-r, 0.0),
        Complex64::new(mu1, 0.0) + i * r,
        Complex64::new((mu1 + mu2) / 2.0, 0.0) - i * r,
        i * (2.0 * r),
        Complex64::new(-10.0 * r, 0.0),
        Complex64::new(top, top) / 2.0,
    ];
    candidates
        .into_iter()
        .filter(|z| v.iter().map(|&mu| (z - mu).norm()).fold(f64::INFINITY, f64::min) >= 1e-6 * top)
        .take(5)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_form, OperatorSpec};
    use crate::domain::Grid1D;
    use crate::twist::{conjugate, TwistSpec};

    fn setup(lam: f64) -> (SpectralDecomposition, TwistedOperator) {
        let g = Grid1D::new(std::f64::consts::PI, 50).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap();
        let d = SpectralDecomposition::from_form(&q).unwrap();
        let op = conjugate(&q.operator(), &TwistSpec::centered(&g, lam).unwrap()).unwrap();
        (d, op)
    }

    #[test]
    fn zero_twist_identical() {
        let (d, op) = setup(0.0);
        let r = appendix_b_identities(&d, &op, Complex64::new(-1.0, 0.0)).unwrap();
        assert_eq!(r.resolvent_error, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn probes_pass() {
        let (d, op) = setup(1.5);
        for z in probe_points(&d) {
            let r = appendix_b_identities(&d, &op, z).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn eigenvalue_rejected() {
        let (d, op) = setup(1.0);
        let mu1 = d.values()[0];
        assert!(matches!(appendix_b_identities(&d, &op, Complex64::new(mu1, 0.0)), Err(Error::Conditioning(_))));
    }
}
