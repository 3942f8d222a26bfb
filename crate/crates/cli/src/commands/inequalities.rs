use heatgauss::assembly::{assemble_form, measure_ellipticity, OperatorSpec, MAX_ORDER};
use heatgauss::inequalities::{
    basic_grid, bond_pairs, check_basic, check_bond, check_epsilon, check_main, check_main_difference, check_stephen,
    gtilde_grid, gtilde_majorant, laplacian_samples, stephen_samples, young_constant, PowerGrid, Range, StephenGrid,
    TIGHTNESS_TOL,
};
use heatgauss::sampling::rng_for;
use heatgauss::spectral::SpectralDecomposition;

use super::Session;
use crate::error::CliResult;
use crate::report::{Artifacts, Report, ReportRow};

const LAPLACIAN_RANDOM: usize = 100;
const LAPLACIAN_SMOOTH: usize = 100;
const STEPHEN_SAMPLES: usize = 100;
const CLAMPED_SMOOTH: usize = 100;

pub fn run(session: &Session, report: &mut Report, _art: &mut Artifacts) -> CliResult<()> {
    let p = &session.coarse;
    let g = *p.form.grid();
    let seed = session.seed();
    let points = session.cfg.sweep.points;
    let label = session.label();

    for (a, b, exact) in [(1.0, 1.0, 0.25), (2.0, 1.0, 4.0 / 27.0)] {
        let c = young_constant(a, b)?;
        let err = (c - exact).abs() / exact;
        report.push(ReportRow::at_most(
            "young-constant",
            format!("p={a} q={b} exact={exact:.17e}"),
            err,
            4.0 * f64::EPSILON,
            None,
        ));
    }

    let basic = check_basic(&basic_grid(points, seed)?)?;
    report.push(ReportRow::from_sweep(format!("seed={seed}"), &basic.sweep));
    report.push(ReportRow::at_most(
        "basic-tightness",
        format!("seed={seed} points={}", basic.tightness_points),
        basic.tightness_error,
        TIGHTNESS_TOL,
        Some(basic.tightness_worst.clone()),
    ));

    let lap = SpectralDecomposition::from_form(&assemble_form(&OperatorSpec::polyharmonic(1)?, &g)?)?;
    let samples = laplacian_samples(&lap, seed, LAPLACIAN_RANDOM, LAPLACIAN_SMOOTH);
    let pair_count = points.div_ceil(samples.len());
    let pairs = bond_pairs(Range::log(0.1, 6.0)?, pair_count, &mut rng_for(seed, "bond"));
    report.push(ReportRow::from_sweep(format!("{label} pairs={pair_count}"), &check_bond(&lap, &pairs, &samples)?));
    report.push(ReportRow::from_sweep(label.clone(), &check_main(&lap, &PowerGrid::main_default()?, &samples)?));
    report.push(ReportRow::from_sweep(label.clone(), &check_epsilon(&lap, &PowerGrid::epsilon_default()?, &samples)?));

    for order in 2..=MAX_ORDER {
        let clamped = SpectralDecomposition::from_form(&assemble_form(&OperatorSpec::polyharmonic(order)?, &g)?)?;
        let mut grid = PowerGrid::main_default()?;
        grid.orders = vec![order];
        let r = check_main_difference(&lap, &clamped, &grid, seed, CLAMPED_SMOOTH)?;
        report.push(ReportRow::from_sweep(format!("{label} clamped_order={order}"), &r));
    }

    let m = p.form.m();
    let c = measure_ellipticity(&p.form, &g, m)?.c;
    let grid = StephenGrid::standard(m)?;
    let train = stephen_samples(&p.decomp, seed, "stephen-train", STEPHEN_SAMPLES);
    let held = stephen_samples(&p.decomp, seed, "stephen-held", STEPHEN_SAMPLES);
    let mut st = check_stephen(&p.form, &p.decomp, &lap, c, &grid, &train, &held)?;
    if let Some(f) = &session.fine {
        let fg = *f.form.grid();
        let flap = SpectralDecomposition::from_form(&assemble_form(&OperatorSpec::polyharmonic(1)?, &fg)?)?;
        let fc = measure_ellipticity(&f.form, &fg, m)?.c;
        let ft = stephen_samples(&f.decomp, seed, "stephen-train", STEPHEN_SAMPLES);
        let fh = stephen_samples(&f.decomp, seed, "stephen-held", STEPHEN_SAMPLES);
        let fs = check_stephen(&f.form, &f.decomp, &flap, fc, &grid, &ft, &fh)?;
        st.fit = st.fit.with_refined(&fs.fit);
    }
    report.push(ReportRow::from_fit(
        "stephen",
        format!("{label} grid={} ellipticity={c:.6e} points={}", grid.len(), st.fit.training + st.fit.held_out),
        "c1",
        &st.fit,
    ));

    let gm = gtilde_majorant(p.gap()?, &gtilde_grid(points, seed)?)?;
    report.push(ReportRow::from_sweep(format!("{label} s={:.6e}", p.gap()?), &gm));
    Ok(())
}
