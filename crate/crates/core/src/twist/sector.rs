use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::operator::TwistedOperator;
use crate::error::{Error, Result};

/// Numerical-range statistics of Ĥ_λ + σ over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorReport {
    pub max_abs_arg: f64,
    pub min_re: f64,
    pub violations: usize,
    /// Index of the sample with the largest angle.
    pub worst: usize,
    /// arctan(1/p).
    pub limit: f64,
    /// The absolute shift σ = c(1+p)(1+s)^{2m}λ^{2m}.
    pub shift: f64,
}

impl SectorReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

const ARG_SLACK: f64 = 1e-12;
const VERTEX_TOL: f64 = 1e-12;

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("sector parameter p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// Shift σ for a normalized constant c.
pub fn sector_shift(op: &TwistedOperator, p: f64, c: f64) -> Result<f64> {
    let (s, m) = op.gap()?;
    let lam = op.twist().lambda();
    Ok(c * (1.0 + p) * (1.0 + s).powi(2 * m as i32) * lam.powi(2 * m as i32))
}

/// Raw values ⟨H_λ f, f⟩_h / ‖f‖²_h − s over the samples.
pub fn sector_values(op: &TwistedOperator, samples: &[DVector<Complex64>]) -> Result<Vec<Complex64>> {
    let (s, _) = op.gap()?;
    samples
        .par_iter()
        .map(|f| {
            let nrm: f64 = f.iter().map(|z| z.norm_sqr()).sum();
            if nrm == 0.0 {
                return Err(Error::Domain("numerical range samples must be nonzero".into()));
            }
            let hf = op.apply_complex(f);
            let num: Complex64 = f.iter().zip(hf.iter()).map(|(a, b)| a.conj() * b).sum();
            Ok(num / nrm - s)
        })
        .collect()
}

fn report_from(values: &[Complex64], p: f64, shift: f64) -> SectorReport {
    let limit = (1.0 / p).atan();
    // values within round-off of the vertex count as lying on it
    let scale = values.iter().fold(shift.abs(), |a, z| a.max(z.norm()));
    let vertex = VERTEX_TOL * scale;
    let mut rep = SectorReport { max_abs_arg: 0.0, min_re: f64::INFINITY, violations: 0, worst: 0, limit, shift };
    for (k, z0) in values.iter().enumerate() {
        let z = z0 + shift;
        let on_vertex = z.norm() <= vertex;
        let arg = if on_vertex { 0.0 } else { z.arg().abs() };
        if arg > rep.max_abs_arg {
            rep.max_abs_arg = arg;
            rep.worst = k;
        }
        rep.min_re = rep.min_re.min(z.re);
        if !on_vertex && (z.re < 0.0 || arg > limit + ARG_SLACK) {
            rep.violations += 1;
        }
    }
    rep
}

/// Angles of z = ⟨(Ĥ_λ + σ) f, f⟩_h / ‖f‖²_h against the sector |arg z| ≤ arctan(1/p).
pub fn numerical_range_sector(op: &TwistedOperator, p: f64, c: f64, samples: &[DVector<Complex64>]) -> Result<SectorReport> {
    check_p(p)?;
    let shift = sector_shift(op, p, c)?;
    Ok(report_from(&sector_values(op, samples)?, p, shift))
}

/// Smallest admissible shift found by bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorShift {
    pub c: f64,
    pub shift: f64,
    pub report: SectorReport,
}

pub const BISECTION_STEPS: usize = 20;

/// Bisection for the least shift in [0, 2·c_hi·(1+s)^{2m}λ^{2m}] that puts every sample in the
/// sector; the search runs on the absolute shift so nested sectors give nested answers.
pub fn sector_shift_search(op: &TwistedOperator, p: f64, samples: &[DVector<Complex64>], c_hi: f64) -> Result<SectorShift> {
    check_p(p)?;
    let values = sector_values(op, samples)?;
    search_values(&values, p, sector_shift(op, p, 1.0)?, c_hi)
}

/// Bracket exponents tried by [`sector_shift_auto`].
pub const AUTO_BRACKETS: std::ops::RangeInclusive<i32> = -8..=4;

/// Like [`sector_shift_search`] with the smallest bracket c_hi = 10^k that contains the shift.
pub fn sector_shift_auto(op: &TwistedOperator, p: f64, samples: &[DVector<Complex64>]) -> Result<SectorShift> {
    check_p(p)?;
    let values = sector_values(op, samples)?;
    let unit = sector_shift(op, p, 1.0)?;
    let mut last = None;
    for k in AUTO_BRACKETS {
        match search_values(&values, p, unit, 10f64.powi(k)) {
            Ok(r) => return Ok(r),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("non-empty bracket list"))
}

fn search_values(values: &[Complex64], p: f64, unit: f64, c_hi: f64) -> Result<SectorShift> {
    let at = |sigma: f64| report_from(values, p, sigma);
    let zero = at(0.0);
    if zero.passed() {
        return Ok(SectorShift { c: 0.0, shift: 0.0, report: zero });
    }
    let sigma_hi = 2.0 * c_hi * unit / (1.0 + p);
    let top = at(sigma_hi);
    if unit == 0.0 || !top.passed() {
        return Err(Error::SearchBound(format!(
            "shift bound c_hi={c_hi} leaves {} samples outside the sector (max |arg| {:.6}, limit {:.6}, min Re {:.6e})",
            top.violations, top.max_abs_arg, top.limit, top.min_re
        )));
    }
    let (mut lo, mut hi) = (0.0, sigma_hi);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if at(mid).passed() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SectorShift { c: hi / unit, shift: hi, report: at(hi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_form, OperatorSpec};
    use crate::domain::Grid1D;
    use crate::sampling::sector_samples;
    use crate::spectral::SpectralDecomposition;
    use crate::twist::{conjugate, TwistSpec};

    fn setup(lam: f64) -> (TwistedOperator, Vec<DVector<Complex64>>) {
        let g = Grid1D::new(std::f64::consts::PI, 60).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap();
        let d = SpectralDecomposition::from_form(&q).unwrap();
        let s = d.spectral_gap().unwrap();
        let op = conjugate(&q.operator(), &TwistSpec::centered(&g, lam).unwrap()).unwrap().with_gap(s, 1);
        (op, sector_samples(&d, 42, 100, 10))
    }

    #[test]
    fn hermitian_case_is_real() {
        let (op, samples) = setup(0.0);
        let rep = numerical_range_sector(&op, 0.5, 0.0, &samples).unwrap();
        assert!(rep.max_abs_arg < 1e-12, "{rep:?}");
        assert_eq!(sector_shift_search(&op, 0.5, &samples, 1.0).unwrap().c, 0.0);
    }

    #[test]
    fn limit_angle() {
        let (op, samples) = setup(1.0);
        let rep = numerical_range_sector(&op, 1.0 - 1e-16, 10.0, &samples).unwrap();
        assert!((rep.limit - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(numerical_range_sector(&op, 1.0, 1.0, &samples).is_err());
    }

    #[test]
    fn search_finds_finite_shift_and_nests() {
        let (op, samples) = setup(1.0);
        let a = sector_shift_search(&op, 0.25, &samples, 100.0).unwrap();
        let b = sector_shift_search(&op, 0.75, &samples, 100.0).unwrap();
        assert!(a.report.passed() && b.report.passed());
        assert!(a.c > 0.0 && a.c.is_finite());
        assert!(b.shift >= a.shift);
        let again = sector_shift_search(&op, 0.25, &samples, 100.0).unwrap();
        assert_eq!(a, again);
        assert!(matches!(sector_shift_search(&op, 0.25, &samples, 1e-9), Err(Error::SearchBound(_))));
    }

    #[test]
    fn more_samples_never_lower_the_shift() {
        let (op, samples) = setup(2.0);
        let few = sector_shift_search(&op, 0.5, &samples[..50], 100.0).unwrap();
        let all = sector_shift_search(&op, 0.5, &samples, 100.0).unwrap();
        assert!(all.c >= few.c);
    }

    #[test]
    fn auto_bracket_resolves_a_beam_shift() {
        let g = Grid1D::new(1.0, 40).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(2).unwrap(), &g).unwrap();
        let d = SpectralDecomposition::from_form(&q).unwrap();
        let s = d.spectral_gap().unwrap();
        let op = conjugate(&q.operator(), &TwistSpec::centered(&g, 0.5).unwrap()).unwrap().with_gap(s, 2);
        let samples = sector_samples(&d, 42, 100, 10);
        let r = sector_shift_auto(&op, 0.5, &samples).unwrap();
        assert!(r.report.passed());
        let wide = sector_shift_search(&op, 0.5, &samples, 10.0).unwrap();
        assert!(r.c <= wide.c && r.c > 0.0, "{} vs {}", r.c, wide.c);
    }
}
