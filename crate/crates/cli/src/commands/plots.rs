use heatgauss::bounds::{boundary_slope, EnvelopeVariant, Side, NOISE_FLOOR};
use heatgauss::spectral::HeatKernelEvaluator;
use heatgauss::twist::{twisted_semigroup_norm_fit, TwistSpec};

use super::twist::norm_times;
use super::{envelope_for, Session};
use crate::error::CliResult;
use crate::report::{Artifacts, Report, ReportRow, Table};
use crate::svg::{heat_table, line_plot, Series};

const PLOT_TIMES: usize = 6;

pub fn run(session: &Session, report: &mut Report, art: &mut Artifacts) -> CliResult<()> {
    let p = &session.coarse;
    let d = &p.decomp;
    let g = *p.form.grid();
    let n = p.n();
    let ev = HeatKernelEvaluator::new(d);
    let label = session.label();
    let times = session.times(PLOT_TIMES)?;
    let y = n / 2;

    let mut profile = Table::new(&["t", "d_x", "k"]);
    let mut series = Vec::new();
    for &t in &times {
        let mut pts = Vec::new();
        for i in 0..=y {
            let k = ev.value(t, i, y).abs();
            profile.push(vec![t, g.distance_at(i), k]);
            if k >= NOISE_FLOOR {
                pts.push((g.distance_at(i).log10(), k.log10()));
            }
        }
        series.push(Series { label: format!("t={t:.3e}"), points: pts });
        match boundary_slope(&ev, t, y, Side::Left) {
            Ok(s) => report.push(ReportRow::new(
                "plot-boundary-slope",
                format!("{label} t={t:.6e}"),
                s.slope,
                s.slope.is_finite(),
                None,
            )),
            Err(e) => report.push(ReportRow::error("plot-boundary-slope", format!("{label} t={t:.6e}"), &e)),
        }
    }
    art.table("kernel_profile.csv", profile);
    art.svg("kernel_vs_distance.svg", line_plot("log10 |k(t,x,y)| at y = L/2", "log10 d_x", "log10 |k|", &series));

    let ts = norm_times(p)?;
    let mut norms = Table::new(&["lambda", "t", "norm"]);
    let mut series = Vec::new();
    for &lam in &session.cfg.sweep.lambdas {
        let tw = TwistSpec::centered(&g, lam)?;
        let fit = twisted_semigroup_norm_fit(d, &tw, &ts)?;
        series.push(Series { label: format!("λ={lam}"), points: fit.rows.iter().map(|r| (r.t, r.norm.ln())).collect() });
        for r in &fit.rows {
            norms.push(vec![lam, r.t, r.norm]);
        }
        report.push(ReportRow::from_fit("plot-twisted-norm", format!("{label} lambda={lam}"), "c", &fit.fit));
    }
    art.table("twist_norm_curves.csv", norms);
    art.svg("twist_norms.svg", line_plot("ln ‖e^{−H_λ t}‖", "t", "ln norm", &series));

    let schedule = session.cfg.schedules()?[0];
    let (fit, env) = envelope_for(session, &schedule, EnvelopeVariant::Statement)?;
    report.push(ReportRow::from_fit("plot-envelope-fit", format!("{label} gamma={}", schedule.gamma()), "c1", &fit.fit));
    let idx = session.positions(p);
    let mut table = Table::new(&["t", "x", "ratio"]);
    let mut cells = Vec::new();
    for &t in &times {
        let mut row = Vec::new();
        for &i in &idx {
            let k = ev.value(t, i, y).abs();
            let e = env.eval(t, g.point(i), g.point(y), g.distance_at(i), g.distance_at(y))?;
            let r = if e > 0.0 { k / e } else { 0.0 };
            table.push(vec![t, g.point(i), r]);
            row.push(r);
        }
        cells.push(row);
    }
    art.table("ratio_table.csv", table);
    let rows: Vec<String> = times.iter().map(|t| format!("t={t:.2e}")).collect();
    let cols: Vec<String> = idx.iter().map(|&i| format!("{:.3}", g.point(i))).collect();
    art.svg("ratio_heat.svg", heat_table("|k| / envelope at y = L/2", &rows, &cols, &cells));
    Ok(())
}
