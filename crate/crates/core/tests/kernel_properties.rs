use heatgauss::assembly::{assemble_form, Coefficient, OperatorSpec};
use heatgauss::domain::Grid1D;
use heatgauss::spectral::{HeatKernelEvaluator, SpectralDecomposition};
use proptest::prelude::*;

fn wavy(m: usize, amp: f64, phase: f64) -> OperatorSpec {
    OperatorSpec::polyharmonic(m).unwrap().with_coefficient(
        m,
        m,
        Coefficient::function(move |x| 1.0 + amp * (6.0 * x + phase).sin()),
    )
}

fn decomp(spec: &OperatorSpec, l: f64, n: usize) -> SpectralDecomposition {
    let g = Grid1D::new(l, n).unwrap();
    SpectralDecomposition::from_form(&assemble_form(spec, &g).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decomposition_invariants(m in 1usize..=3, amp in 0.0f64..0.8, phase in 0.0f64..6.3, n in 12usize..40) {
        let spec = wavy(m, amp, phase);
        let g = Grid1D::new(1.0, n).unwrap();
        let q = assemble_form(&spec, &g).unwrap();
        let d = SpectralDecomposition::from_form(&q).unwrap();
        prop_assert!(d.orthonormality_error() <= 1e-8);
        prop_assert!(d.reconstruction_error(&q) <= 1e-8);
        prop_assert!(d.eigen_residual(&q) <= 1e-8);
        prop_assert!(d.spectral_gap().unwrap() > 0.0);
        prop_assert!(q.asymmetry() <= 1e-12);
    }

    #[test]
    fn chapman_kolmogorov_and_symmetry(amp in 0.0f64..0.8, t in 0.01f64..0.5, i in 0usize..30, j in 0usize..30) {
        let d = decomp(&wavy(1, amp, 0.3), 1.0, 30);
        let ev = HeatKernelEvaluator::new(&d);
        let h = d.grid().h();
        prop_assert_eq!(ev.value(t, i, j), ev.value(t, j, i));
        let direct = ev.value(2.0 * t, i, j);
        let composed: f64 = (0..30).map(|u| ev.value(t, i, u) * ev.value(t, u, j)).sum::<f64>() * h;
        prop_assert!((direct - composed).abs() <= 1e-8 * direct.abs().max(1e-300));
    }

    #[test]
    fn trace_is_positive_and_decreasing(m in 1usize..=2, t in 1e-3f64..1.0) {
        let d = decomp(&OperatorSpec::polyharmonic(m).unwrap(), 1.0, 25);
        let ev = HeatKernelEvaluator::new(&d);
        let a = ev.trace(t);
        prop_assert!(a > 0.0);
        prop_assert!(ev.trace(1.5 * t) < a);
    }
}

#[test]
fn kernel_vanishes_towards_the_boundary() {
    for m in [1, 2] {
        let d = decomp(&OperatorSpec::polyharmonic(m).unwrap(), 1.0, 80);
        let ev = HeatKernelEvaluator::new(&d);
        let t = 1.0 / d.spectral_gap().unwrap();
        let profile: Vec<f64> = (0..10).map(|i| ev.value(t, i, 40).abs()).collect();
        assert!(profile.windows(2).all(|w| w[0] < w[1]), "m={m}: {profile:?}");
        assert!(profile[0] < 0.2 * profile[9]);
    }
}

#[test]
fn long_time_law() {
    let d = decomp(&wavy(2, 0.5, 1.0), 1.0, 60);
    let ev = HeatKernelEvaluator::new(&d);
    let s = d.spectral_gap().unwrap();
    let sup =
        |t: f64| (0..60).flat_map(|i| (0..60).map(move |j| (i, j))).map(|(i, j)| ev.value(t, i, j).abs()).fold(0.0, f64::max);
    let (t1, t2) = (10.0 / s, 20.0 / s);
    let rate = (sup(t1).ln() - sup(t2).ln()) / (t2 - t1);
    assert!((rate - s).abs() <= 0.01 * s);
    let peak = d.vectors().column(0).iter().map(|v| v * v).fold(0.0, f64::max);
    let quotient = -sup(t1).ln() / t1;
    assert!((quotient - (s - peak.ln() / t1)).abs() <= 0.01 * s);
}
