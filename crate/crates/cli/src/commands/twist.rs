use heatgauss::bounds::log_grid;
use heatgauss::sampling::{complex_samples, real_samples, sector_samples};
use heatgauss::spectral::HeatKernelEvaluator;
use heatgauss::twist::{
    appendix_b_identities, conjugate, evolved_twisted_form_check, form_perturbation_bound_fit, per_lambda, probe_points,
    sector_shift_auto, twisted_kernel, twisted_semigroup_norm_fit, PerturbationGrid, TwistSpec, PER_LAMBDA_TOL, SPECTRUM_TOL,
};

use super::{Problem, Session};
use crate::error::CliResult;
use crate::report::{Artifacts, Report, ReportRow, Table};

const NORM_TIMES: usize = 10;
const FIT_SAMPLES: usize = 20;
const SECTOR_MODES: usize = 10;

/// Log grid on [max(10·floor, 10^{−2}/s), 2/s], shared by both meshes.
pub fn norm_times(p: &Problem) -> CliResult<Vec<f64>> {
    let s = p.gap()?;
    let lo = (10.0 * p.form.grid().time_floor(p.form.m())).max(1e-2 / s);
    Ok(log_grid(lo, 2.0 / s, NORM_TIMES))
}

pub fn run(session: &Session, report: &mut Report, art: &mut Artifacts) -> CliResult<()> {
    let p = &session.coarse;
    let d = &p.decomp;
    let g = *p.form.grid();
    let n = p.n();
    let m = p.form.m();
    let s = p.gap()?;
    let seed = session.seed();
    let label = session.label();
    let ev = HeatKernelEvaluator::new(d);
    let ts = norm_times(p)?;
    let train = real_samples(seed, "twist-train", n, FIT_SAMPLES);
    let held = real_samples(seed, "twist-held", n, FIT_SAMPLES);
    let per_samples = complex_samples(seed, "per-lambda", n, session.cfg.sweep.samples);
    let sectors = sector_samples(d, seed, session.cfg.sweep.samples, SECTOR_MODES);
    let idx = session.positions(p);
    let alpha = session.cfg.sweep.alpha;
    let mut norms = Table::new(&["lambda", "t", "norm", "rate"]);

    for &lam in &session.cfg.sweep.lambdas {
        let tag = format!("{label} lambda={lam}");
        let tw = TwistSpec::centered(&g, lam)?;
        let op = conjugate(&p.form.operator(), &tw)?.with_gap(s, m);

        let err = op.spectrum_error(d.values())?;
        report.push(ReportRow::at_most("twist-spectrum", tag.clone(), err, SPECTRUM_TOL, None));

        let mut failures = Vec::new();
        let mut evaluated = 0;
        for &t in &ts {
            for &i in &idx {
                for &j in &idx {
                    evaluated += 1;
                    if let Err(e) = twisted_kernel(&ev, &tw, t, i, j) {
                        failures.push(e.to_string());
                    }
                }
            }
        }
        report.push(ReportRow::new(
            "twisted-kernel",
            format!("{tag} evaluated={evaluated}"),
            failures.len() as f64,
            failures.is_empty(),
            failures.into_iter().next(),
        ));

        let mut worst = (0.0f64, 0usize);
        for (k, f) in per_samples.iter().enumerate() {
            let r = per_lambda(&p.form, &tw, f)?.relative_error;
            if r > worst.0 || r.is_nan() {
                worst = (r, k);
            }
        }
        report.push(ReportRow::at_most(
            "per-lambda",
            format!("{tag} samples={}", per_samples.len()),
            worst.0,
            PER_LAMBDA_TOL,
            Some(format!("sample {} of complex_samples(seed={seed}, \"per-lambda\")", worst.1)),
        ));

        for z in probe_points(d) {
            let name = format!("{tag} z={:.6e}{:+.6e}i", z.re, z.im);
            match appendix_b_identities(d, &op, z) {
                Ok(r) => report.push(ReportRow::new(
                    "resolvent-identity",
                    format!("{name} spectrum_error={:.3e}", r.spectrum_error),
                    r.resolvent_error,
                    r.passed(),
                    Some(format!("distance={:.6e}", r.distance)),
                )),
                Err(e) => report.push(ReportRow::error("resolvent-identity", name, &e)),
            }
        }

        for &sp in &session.cfg.sweep.sector_p {
            let name = format!("{tag} p={sp}");
            match sector_shift_auto(&op, sp, &sectors) {
                Ok(r) => {
                    let limit = (1.0 / sp).atan();
                    report.push(ReportRow::new(
                        "sector",
                        format!(
                            "{name} samples={} shift={:.6e} c={:.6e} violations={}",
                            sectors.len(),
                            r.shift,
                            r.c,
                            r.report.violations
                        ),
                        r.report.max_abs_arg,
                        r.report.passed() && r.report.max_abs_arg <= limit,
                        Some(format!("max|arg|={:.6} limit={limit:.6} min_re={:.6e}", r.report.max_abs_arg, r.report.min_re)),
                    ));
                }
                Err(e) => report.push(ReportRow::error("sector", name, &e)),
            }
        }

        let nf = twisted_semigroup_norm_fit(d, &tw, &ts)?;
        for r in &nf.rows {
            norms.push(vec![lam, r.t, r.norm, r.rate]);
        }
        let mut etf = evolved_twisted_form_check(d, &tw, alpha, nf.c(), &ts, &train, &held)?.fit;
        let mut fit = nf.fit.clone();
        if let Some(f) = &session.fine {
            let ftw = TwistSpec::centered(f.form.grid(), lam)?;
            let fnf = twisted_semigroup_norm_fit(&f.decomp, &ftw, &ts)?;
            let fr = real_samples(seed, "twist-train", f.n(), FIT_SAMPLES);
            let fh = real_samples(seed, "twist-held", f.n(), FIT_SAMPLES);
            let fet = evolved_twisted_form_check(&f.decomp, &ftw, alpha, fnf.c(), &ts, &fr, &fh)?.fit;
            fit = fit.with_refined(&fnf.fit);
            etf = etf.with_refined(&fet);
        }
        report.push(ReportRow::from_fit("twisted-norm", tag.clone(), "c", &fit));
        report.push(ReportRow::from_fit("evolved-twisted-form", format!("{tag} alpha={alpha}"), "c1", &etf));
    }
    art.table("twist_norms.csv", norms);

    let template = TwistSpec::centered(&g, 1.0)?;
    let count = (session.cfg.sweep.samples / 10).max(2);
    let pt = complex_samples(seed, "perturbation-train", n, count);
    let ph = complex_samples(seed, "perturbation-held", n, count);
    let grid = PerturbationGrid::default();
    let mut fit = form_perturbation_bound_fit(&p.form, d, &template, &grid, &pt, &ph)?;
    if let Some(f) = &session.fine {
        let ft = TwistSpec::centered(f.form.grid(), 1.0)?;
        let a = complex_samples(seed, "perturbation-train", f.n(), count);
        let b = complex_samples(seed, "perturbation-held", f.n(), count);
        fit = fit.with_refined(&form_perturbation_bound_fit(&f.form, &f.decomp, &ft, &grid, &a, &b)?);
    }
    report.push(ReportRow::from_fit("form-perturbation", label, "c1", &fit));
    Ok(())
}
