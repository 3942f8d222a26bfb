use heatgauss::bounds::{
    fit_envelope_constants, BoundEnvelope, EnvelopeFit, EnvelopeGrid, EnvelopeVariant, ENVELOPE_DRIFT_BUDGET, FLOOR_MARGIN,
    NOISE_FLOOR,
};
use heatgauss::domain::GammaSchedule;
use heatgauss::spectral::HeatKernelEvaluator;

use super::Session;
use crate::error::CliResult;
use crate::report::{Artifacts, Report, ReportRow, Table};

const DUMP_TIMES: usize = 8;

/// Fits the envelope for one schedule, against the refined mesh when there is one.
pub fn envelope_for(
    session: &Session,
    schedule: &GammaSchedule,
    variant: EnvelopeVariant,
) -> CliResult<(EnvelopeFit, BoundEnvelope)> {
    let coarse = HeatKernelEvaluator::new(&session.coarse.decomp);
    let fine = session.fine.as_ref().map(|f| HeatKernelEvaluator::new(&f.decomp));
    let mut grid = EnvelopeGrid::standard(&coarse, fine.as_ref())?;
    if let Some(c2) = &session.cfg.sweep.c2 {
        grid.c2_grid = c2.clone();
    }
    let fit = fit_envelope_constants(&coarse, fine.as_ref(), schedule, variant, &grid)?;
    let env = BoundEnvelope::new(*schedule, session.coarse.gap()?, fit.c1, fit.c2)?.with_variant(variant);
    Ok((fit, env))
}

pub fn run(session: &Session, report: &mut Report, art: &mut Artifacts) -> CliResult<()> {
    let schedule = session.cfg.schedules()?[0];
    let label = format!("{} gamma={}", session.label(), schedule.gamma());
    let (fit, env) = envelope_for(session, &schedule, EnvelopeVariant::Statement)?;
    report.push(ReportRow::from_fit("envelope-fit", label.clone(), "c1", &fit.fit));

    let p = &session.coarse;
    let ev = HeatKernelEvaluator::new(&p.decomp);
    let g = *p.form.grid();
    let s = p.gap()?;
    let lo = FLOOR_MARGIN * ev.floor();
    let hi = 2.0 / s;
    let idx = session.positions(p);
    let mut table = Table::new(&["t", "x", "y", "d_x", "d_y", "k", "envelope", "ratio"]);
    let mut worst = (0.0f64, String::new());
    for t in session.times(DUMP_TIMES)? {
        for &i in &idx {
            for &j in &idx {
                let (x, y, dx, dy) = (g.point(i), g.point(j), g.distance_at(i), g.distance_at(j));
                let k = ev.eval(t, i, j)?.value;
                let e = env.eval(t, x, y, dx, dy)?;
                let ratio = if e > 0.0 { k.abs() / e } else { f64::INFINITY };
                let inside = t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12) && k.abs() >= NOISE_FLOOR;
                if inside && ratio > worst.0 {
                    worst = (ratio, format!("t={t:.6e} x={x:.6} y={y:.6} k={k:.6e} envelope={e:.6e}"));
                }
                table.push(vec![t, x, y, dx, dy, k, e, ratio]);
            }
        }
    }
    art.table("kernel.csv", table);
    report.push(ReportRow::at_most(
        "kernel-envelope-ratio",
        format!("{label} c1={:.6e} c2={:.6e}", fit.c1, fit.c2),
        worst.0,
        1.0 + ENVELOPE_DRIFT_BUDGET,
        Some(worst.1),
    ));
    Ok(())
}
