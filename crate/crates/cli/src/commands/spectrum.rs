use heatgauss::fit::relative_drift;

use super::Session;
use crate::config::CoefficientSource;
use crate::error::CliResult;
use crate::report::{Artifacts, Report, ReportRow, Table};

const RESIDUAL_TOL: f64 = 1e-8;
const LAPLACE_TOL: f64 = 0.005;
const BEAM_TOL: f64 = 0.01;
const DRIFT_BUDGET: f64 = 0.10;

/// First positive root of cos β cosh β = 1.
pub fn clamped_beam_root() -> f64 {
    let f = |b: f64| b.cos() * b.cosh() - 1.0;
    let (mut lo, mut hi) = (4.0, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo).signum() == f(mid).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Continuum first eigenvalue and tolerance for the unweighted operators that have one.
pub fn reference_first_eigenvalue(source: &CoefficientSource, m: usize, length: f64) -> Option<(f64, f64)> {
    let plain = match source {
        CoefficientSource::Polyharmonic => true,
        CoefficientSource::Profile(p) => p == "laplace-pi" || p == "beam-1",
        CoefficientSource::Csv(_) => false,
    };
    match (plain, m) {
        (true, 1) => Some(((std::f64::consts::PI / length).powi(2), LAPLACE_TOL)),
        (true, 2) => Some(((clamped_beam_root() / length).powi(4), BEAM_TOL)),
        _ => None,
    }
}

pub fn run(session: &Session, report: &mut Report, art: &mut Artifacts) -> CliResult<()> {
    let c = &session.coarse;
    let label = session.label();
    let values = c.decomp.values();
    let fine = session.fine.as_ref().map(|f| f.decomp.values());
    let mut table = Table::new(if fine.is_some() { &["k", "mu", "mu_refined"] } else { &["k", "mu"] });
    for (k, &mu) in values.iter().enumerate() {
        let mut row = vec![(k + 1) as f64, mu];
        if let Some(f) = fine {
            row.push(f[k]);
        }
        table.push(row);
    }
    art.table("spectrum.csv", table);

    let s = c.gap()?;
    report.push(ReportRow::new("spectral-gap", label.clone(), s, s > 0.0, None));
    let res = c.decomp.eigen_residual(&c.form);
    report.push(ReportRow::at_most("eigen-residual", label.clone(), res, RESIDUAL_TOL, None));
    let cfg = &session.cfg;
    if let Some((mu, tol)) = reference_first_eigenvalue(&cfg.operator.source, cfg.operator.m, cfg.operator.length) {
        let err = (s - mu).abs() / mu;
        report.push(ReportRow::at_most(
            "first-eigenvalue-reference",
            format!("{label} reference={mu:.10e}"),
            err,
            tol,
            Some(format!("mu1={s:.12e} reference={mu:.12e}")),
        ));
    }
    if let Some(f) = &session.fine {
        let sf = f.gap()?;
        if let Some((mu, tol)) = reference_first_eigenvalue(&cfg.operator.source, cfg.operator.m, cfg.operator.length) {
            report.push(ReportRow::at_most(
                "first-eigenvalue-reference",
                format!("{label} mesh=refined reference={mu:.10e}"),
                (sf - mu).abs() / mu,
                tol,
                Some(format!("mu1={sf:.12e} reference={mu:.12e}")),
            ));
        }
        let d = relative_drift(s, sf);
        report.push(ReportRow::at_most("spectral-gap-drift", label, d, DRIFT_BUDGET, None));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beam_root() {
        let b = clamped_beam_root();
        assert!((b - 4.730040744862704).abs() < 1e-12);
        assert!((b.powi(4) - 500.5639).abs() < 1e-3);
    }

    #[test]
    fn references() {
        let (mu, _) =
            reference_first_eigenvalue(&CoefficientSource::Profile("laplace-pi".into()), 1, std::f64::consts::PI).unwrap();
        assert!((mu - 1.0).abs() < 1e-15);
        assert!(reference_first_eigenvalue(&CoefficientSource::Profile("beam-wavy".into()), 2, 1.0).is_none());
        assert!(reference_first_eigenvalue(&CoefficientSource::Polyharmonic, 3, 1.0).is_none());
    }
}
