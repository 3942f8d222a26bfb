use heatgauss::assembly::{assemble_form, OperatorSpec};
use heatgauss::domain::Grid1D;
use heatgauss::sampling::{complex_samples, sector_samples};
use heatgauss::spectral::SpectralDecomposition;
use heatgauss::twist::{conjugate, per_lambda, sector_shift_auto, TwistSpec};
use proptest::prelude::*;

fn setup(m: usize, n: usize) -> (heatgauss::assembly::FormMatrix, SpectralDecomposition) {
    let g = Grid1D::new(1.0, n).unwrap();
    let q = assemble_form(&OperatorSpec::polyharmonic(m).unwrap(), &g).unwrap();
    let d = SpectralDecomposition::from_form(&q).unwrap();
    (q, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn psi_is_affine_with_unit_slope(x0 in 0.0f64..1.0, sign in prop::bool::ANY, lam in 0.0f64..3.0) {
        let g = Grid1D::new(1.0, 20).unwrap();
        let a = if sign { 1.0 } else { -1.0 };
        let tw = TwistSpec::new(&g, x0, a, lam).unwrap();
        let psi = tw.psi();
        for i in 0..20 {
            for j in 0..20 {
                prop_assert!((psi[j] - psi[i] - a * (g.point(j) - g.point(i))).abs() < 1e-12);
            }
        }
        prop_assert!((psi[g.nearest_index(x0)] - a * (g.point(g.nearest_index(x0)) - x0)).abs() < 1e-12);
    }

    #[test]
    fn spectrum_is_invariant(m in 1usize..=2, lam in 0.0f64..4.0) {
        let (q, d) = setup(m, 24);
        let tw = TwistSpec::centered(q.grid(), lam).unwrap();
        let op = conjugate(&q.operator(), &tw).unwrap();
        prop_assert!(op.spectrum_error(d.values()).unwrap() <= 1e-8);
    }

    #[test]
    fn per_lambda_paths_agree(m in 1usize..=3, lam in 0.01f64..3.0, seed in 0u64..1000) {
        let (q, _) = setup(m, 20);
        let tw = TwistSpec::centered(q.grid(), lam).unwrap();
        for f in complex_samples(seed, "prop", 20, 3) {
            prop_assert!(per_lambda(&q, &tw, &f).unwrap().relative_error <= 1e-8);
        }
    }
}

#[test]
fn zero_twist_is_exact() {
    let (q, _) = setup(2, 16);
    let tw = TwistSpec::centered(q.grid(), 0.0).unwrap();
    let op = conjugate(&q.operator(), &tw).unwrap();
    assert_eq!(op.matrix(), &q.operator());
    let f = &complex_samples(1, "zero", 16, 1)[0];
    assert_eq!(per_lambda(&q, &tw, f).unwrap().direct.norm(), 0.0);
}

#[test]
fn sector_shift_is_monotone() {
    let (q, d) = setup(1, 40);
    let s = d.spectral_gap().unwrap();
    let samples = sector_samples(&d, 42, 200, 10);
    let shifts: Vec<Vec<f64>> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&lam| {
            let tw = TwistSpec::centered(q.grid(), lam).unwrap();
            let op = conjugate(&q.operator(), &tw).unwrap().with_gap(s, 1);
            [0.25, 0.5, 0.75].iter().map(|&p| sector_shift_auto(&op, p, &samples).unwrap().shift).collect()
        })
        .collect();
    for row in &shifts {
        assert!(row.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6)), "{shifts:?}");
    }
    for k in 0..3 {
        assert!(shifts.windows(2).all(|w| w[1][k] >= w[0][k] * (1.0 - 1e-6)), "{shifts:?}");
    }
}
