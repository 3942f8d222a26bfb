use heatgauss::assembly::{assemble_form, measure_ellipticity, OperatorSpec};
use heatgauss::bounds::{fit_envelope_constants, EnvelopeGrid, EnvelopeVariant};
use heatgauss::domain::GammaSchedule;
use heatgauss::inequalities::{check_stephen, stephen_samples, StephenGrid};
use heatgauss::profiles::builtin;
use heatgauss::spectral::{HeatKernelEvaluator, SpectralDecomposition};

#[test]
fn wavy_beam_envelope_is_mesh_stable() {
    let p = builtin("beam-wavy").unwrap();
    let coarse = SpectralDecomposition::from_form(&p.form(60).unwrap()).unwrap();
    let fine = SpectralDecomposition::from_form(&p.form(120).unwrap()).unwrap();
    let (ec, ef) = (HeatKernelEvaluator::new(&coarse), HeatKernelEvaluator::new(&fine));
    let grid = EnvelopeGrid::standard(&ec, Some(&ef)).unwrap();
    for g in [0.0, 0.75] {
        let sched = GammaSchedule::from_gamma(2, 1, g).unwrap();
        let fit = fit_envelope_constants(&ec, Some(&ef), &sched, EnvelopeVariant::Statement, &grid).unwrap();
        assert!(fit.fit.passed(), "γ={g}: {}", fit.fit);
        assert!(fit.c1 > 0.0 && fit.c2 > 0.0);
    }
}

#[test]
fn wavy_beam_absorption_fit() {
    let p = builtin("beam-wavy").unwrap();
    let q = p.form(60).unwrap();
    let g = *q.grid();
    let d = SpectralDecomposition::from_form(&q).unwrap();
    let lap = SpectralDecomposition::from_form(&assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap()).unwrap();
    let c = measure_ellipticity(&q, &g, 2).unwrap().c;
    assert!(c > 1.0);
    let st = check_stephen(
        &q,
        &d,
        &lap,
        c,
        &StephenGrid::standard(2).unwrap(),
        &stephen_samples(&d, 5, "train", 30),
        &stephen_samples(&d, 5, "held", 30),
    )
    .unwrap();
    assert_eq!(st.fit.violations, 0, "{}", st.fit);
}
