use heatgauss::bounds::{
    boundary_slope, log_grid, longtime_rate, longtime_window, smalltime_prefactor, smalltime_prefactor_fit, smalltime_window,
    sobolev_pointwise_check, EnvelopeVariant, Side, FLOOR_MARGIN,
};
use heatgauss::inequalities::{gtilde_grid, gtilde_majorant};
use heatgauss::sampling::{real_samples, smoothed_samples};
use heatgauss::spectral::{evolved_form_bound_check, HeatKernelEvaluator};

use super::{envelope_for, Session};
use crate::error::CliResult;
use crate::report::{Artifacts, Report, ReportRow, Table};

const WINDOW: usize = 12;
const RATE_TOL: f64 = 0.01;
/// Sobolev sample count relative to the configured one.
const SOBOLEV_SHARE: usize = 10;

pub fn run(session: &Session, report: &mut Report, art: &mut Artifacts) -> CliResult<()> {
    let p = &session.coarse;
    let ev = HeatKernelEvaluator::new(&p.decomp);
    let fine_ev = session.fine.as_ref().map(|f| HeatKernelEvaluator::new(&f.decomp));
    let s = p.gap()?;
    let n = p.n();
    let label = session.label();
    let seed = session.seed();
    let fractions = &session.cfg.sweep.positions;
    let count = (session.cfg.sweep.samples / SOBOLEV_SHARE).max(2);
    let sob_train = smoothed_samples(&p.decomp, seed, "sobolev-train", count, 0.1, 10.0);
    let sob_held = smoothed_samples(&p.decomp, seed, "sobolev-held", count, 0.1, 10.0);
    let window = smalltime_window(&ev, WINDOW)?;

    let mut profile = Table::new(&["gamma", "variant", "c2", "c1"]);
    for schedule in session.cfg.schedules()? {
        let g = schedule.gamma();
        let tag = format!("{label} gamma={g}");
        for variant in [EnvelopeVariant::Statement, EnvelopeVariant::Proof] {
            let k = variant as usize as f64;
            match envelope_for(session, &schedule, variant) {
                Ok((fit, _)) => {
                    for &(c2, c1) in &fit.profile {
                        profile.push(vec![g, k, c2, c1]);
                    }
                    let name = format!("{tag} variant={} c2={:.6e}", variant.name(), fit.c2);
                    report.push(ReportRow::from_fit("envelope-fit", name, "c1", &fit.fit));
                }
                Err(e) => report.push(ReportRow::error("envelope-fit", format!("{tag} variant={}", variant.name()), &e)),
            }
        }
        for (side, y) in [(Side::Left, n / 2), (Side::Right, (n - 1) / 2)] {
            let t = 1.0 / s;
            let name = format!("{tag} side={side:?} t={t:.6e}");
            match boundary_slope(&ev, t, y, side) {
                Ok(fit) => report.push(ReportRow::new(
                    "boundary-slope",
                    format!("{name} points={}", fit.points),
                    fit.slope,
                    fit.dominates(&schedule),
                    Some(format!("slope={:.6} gamma={g}", fit.slope)),
                )),
                Err(e) => report.push(ReportRow::error("boundary-slope", name, &e)),
            }
        }
        match &fine_ev {
            Some(f) => {
                let fit = smalltime_prefactor_fit(&ev, f, &schedule, &window, fractions)?;
                report.push(ReportRow::from_fit("smalltime-prefactor", tag.clone(), "sup", &fit));
            }
            None => {
                let st = smalltime_prefactor(&ev, &schedule, &window, fractions)?;
                report.push(ReportRow::new(
                    "smalltime-prefactor",
                    tag.clone(),
                    st.sup,
                    st.sup.is_finite() && st.sup > 0.0,
                    Some(format!("t={:.6e} x={:.6} y={:.6}", st.at.0, st.at.1, st.at.2)),
                ));
            }
        }
        let mut fit = sobolev_pointwise_check(&p.decomp, &schedule, &sob_train, &sob_held, fractions)?;
        if let Some(f) = &session.fine {
            let ft = smoothed_samples(&f.decomp, seed, "sobolev-train", count, 0.1, 10.0);
            let fh = smoothed_samples(&f.decomp, seed, "sobolev-held", count, 0.1, 10.0);
            fit = fit.with_refined(&sobolev_pointwise_check(&f.decomp, &schedule, &ft, &fh, fractions)?);
        }
        report.push(ReportRow::from_fit("sobolev-pointwise", tag, "C", &fit));
    }
    art.table("envelope_profile.csv", profile);

    let rate = longtime_rate(&ev, &longtime_window(s, 8))?;
    report.push(ReportRow::at_most(
        "longtime-rate",
        format!("{label} s={s:.10e}"),
        rate.relative_error,
        RATE_TOL,
        Some(format!("rate={:.10e} gap={:.10e}", rate.rate, rate.gap)),
    ));

    let ts = log_grid(FLOOR_MARGIN * ev.floor(), 20.0 / s, WINDOW);
    let samples = real_samples(seed, "evolved-form", n, session.cfg.sweep.samples);
    let ef = evolved_form_bound_check(&p.decomp, &ts, &samples)?;
    report.push(ReportRow::new(
        "evolved-form",
        format!("{label} times={} samples={} violations={}", ts.len(), samples.len(), ef.violations),
        ef.worst.ratio,
        ef.passed(),
        Some(format!("t={:.6e} sample={} ratio={:.6e}", ef.worst.t, ef.worst.sample, ef.worst.ratio)),
    ));

    let gm = gtilde_majorant(s, &gtilde_grid(session.cfg.sweep.points, seed)?)?;
    report.push(ReportRow::from_sweep(format!("{label} s={s:.6e}"), &gm));
    Ok(())
}
