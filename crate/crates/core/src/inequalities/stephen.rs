use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::search::Range;
use crate::assembly::FormMatrix;
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::sampling::rng_for;
use crate::spectral::{top_eigenpair, SpectralDecomposition};

pub const STEPHEN_DRIFT_BUDGET: f64 = 0.15;
const SLACK: f64 = 1e-10;

/// Parameters (p ≤ m, ρ, θ, λ) of the lower-order absorption inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct StephenGrid {
    pub orders: Vec<usize>,
    pub rhos: Vec<f64>,
    pub thetas: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl StephenGrid {
    /// ρ = ε^{1−2m} for ε ∈ [0.1, 1], θ ∈ [10⁻², 10²], λ ∈ {0} ∪ [10⁻², 10²].
    pub fn standard(m: usize) -> Result<Self> {
        let mut lambdas = vec![0.0];
        lambdas.extend(Range::log(1e-2, 1e2)?.grid(10));
        let rhos = Range::log(0.1, 1.0)?.grid(6).into_iter().map(|e| e.powi(1 - 2 * m as i32)).collect();
        Ok(Self { orders: (1..=m).collect(), rhos, thetas: Range::log(1e-2, 1e2)?.grid(6), lambdas })
    }

    pub fn len(&self) -> usize {
        self.orders.len() * self.rhos.len() * self.thetas.len() * self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StephenReport {
    pub fit: FitResult,
    /// The measured ellipticity constant, for scale comparison with c1.
    pub ellipticity: f64,
    pub s: f64,
}

struct Moments {
    label: String,
    lap: Vec<f64>,
    q: f64,
    n: f64,
}

fn moments(lap: &SpectralDecomposition, form: &FormMatrix, m: usize, label: String, f: &DVector<f64>) -> Moments {
    let c = lap.coefficients(f);
    let w: Vec<f64> = c.iter().map(|x| x * x).collect();
    let lapm = (1..=m).map(|p| w.iter().zip(lap.values()).map(|(w, mu)| w * mu.powi(p as i32)).sum()).collect();
    Moments { label, lap: lapm, q: form.quadratic(f), n: w.iter().sum() }
}

/// Maximizer of ‖(−Δ_h)^{p/2} f‖² / Q(f), from Lanczos in the form's eigenbasis.
pub fn pencil_extremal(lap: &SpectralDecomposition, decomp: &SpectralDecomposition, p: usize) -> Result<DVector<f64>> {
    let h = lap.grid().h();
    let g: DMatrix<f64> = decomp.vectors().tr_mul(lap.vectors()) * h;
    let scale: Vec<f64> = decomp.values().iter().map(|q| q.sqrt().recip()).collect();
    let mu: Vec<f64> = lap.values().iter().map(|v| v.powi(p as i32)).collect();
    let start = DVector::from_fn(decomp.len(), |i, _| 1.0 / (1.0 + i as f64));
    let (_, y) = top_eigenpair(start, 120, |x| {
        let a = DVector::from_fn(x.len(), |i, _| x[i] * scale[i]);
        let mut b = g.tr_mul(&a);
        for (v, m) in b.iter_mut().zip(&mu) {
            *v *= m;
        }
        let c = &g * b;
        DVector::from_fn(c.len(), |i, _| c[i] * scale[i])
    })?;
    let coef = DVector::from_fn(y.len(), |i, _| y[i] * scale[i]);
    Ok(decomp.synthesize(&coef))
}

/// Least c1 with ‖(−Δ_h)^{p/2}f‖² + ρλ^{2p}‖f‖² ≤ c1(1+θ)Q(f) + c1ρ(1+θs/ρ)^{2m}λ^{2m}‖f‖²
/// over the training vectors (extended by every eigenmode and the pencil maximizers),
/// validated on the held-out vectors.
#[allow(clippy::too_many_arguments)]
pub fn check_stephen(
    form: &FormMatrix,
    decomp: &SpectralDecomposition,
    lap: &SpectralDecomposition,
    ellipticity: f64,
    grid: &StephenGrid,
    training: &[DVector<f64>],
    held_out: &[DVector<f64>],
) -> Result<StephenReport> {
    let m = form.m();
    if decomp.m() != m || lap.m() != 1 || lap.grid() != form.grid() || decomp.grid() != form.grid() {
        return Err(Error::Contract("form, its decomposition and the Laplacian must share grid and order".into()));
    }
    if grid.orders.iter().any(|&p| p == 0 || p > m) {
        return Err(Error::Parameter(format!("orders must lie in 1..={m}")));
    }
    if grid.rhos.iter().chain(&grid.thetas).any(|&x| !(x > 0.0)) {
        return Err(Error::Parameter("ρ and θ must be positive".into()));
    }
    let s = decomp.spectral_gap()?;
    let mut train: Vec<Moments> = Vec::new();
    for k in 0..decomp.len() {
        train.push(moments(lap, form, m, format!("ψ_{}", k + 1), &decomp.vectors().column(k).into_owned()));
        train.push(moments(lap, form, m, format!("φ_{}", k + 1), &lap.vectors().column(k).into_owned()));
    }
    for &p in &grid.orders {
        train.push(moments(lap, form, m, format!("pencil p={p}"), &pencil_extremal(lap, decomp, p)?));
    }
    for (i, f) in training.iter().enumerate() {
        train.push(moments(lap, form, m, format!("train#{i}"), f));
    }
    let held: Vec<Moments> = held_out.iter().enumerate().map(|(i, f)| moments(lap, form, m, format!("held#{i}"), f)).collect();

    let params: Vec<(usize, f64, f64, f64)> = grid
        .orders
        .iter()
        .flat_map(|&p| {
            grid.rhos
                .iter()
                .flat_map(move |&r| grid.thetas.iter().flat_map(move |&t| grid.lambdas.iter().map(move |&l| (p, r, t, l))))
        })
        .collect();
    let ratio = |x: &Moments, (p, rho, th, lam): (usize, f64, f64, f64)| -> f64 {
        let lhs = x.lap[p - 1] + rho * lam.abs().powi(2 * p as i32) * x.n;
        let rhs = (1.0 + th) * x.q + rho * (1.0 + th * s / rho).powi(2 * m as i32) * lam.abs().powi(2 * m as i32) * x.n;
        lhs / rhs
    };
    let fmt_at = |x: &Moments, (p, rho, th, lam): (usize, f64, f64, f64)| {
        format!("p={p} ρ={rho:.6e} θ={th:.6e} λ={lam:.6e} f={}", x.label)
    };
    let (c1, worst) = params
        .par_iter()
        .map(|&pr| {
            train.iter().fold((0.0f64, None), |(b, w), x| {
                let r = ratio(x, pr);
                if r > b {
                    (r, Some((pr, x)))
                } else {
                    (b, w)
                }
            })
        })
        .reduce(|| (0.0, None), |a, b| if b.0 > a.0 { b } else { a });
    let bad: Vec<String> = params
        .par_iter()
        .flat_map_iter(|&pr| {
            held.iter()
                .filter(move |x| ratio(x, pr) > c1 * (1.0 + SLACK))
                .map(move |x| format!("{} ratio={:.6e}", fmt_at(x, pr), ratio(x, pr)))
        })
        .collect();
    let mut fit = FitResult::new(vec![("c1".into(), c1)], STEPHEN_DRIFT_BUDGET);
    fit.worst = worst.map(|(pr, x)| fmt_at(x, pr));
    fit.training = train.len() * params.len();
    fit.held_out = held.len() * params.len();
    fit.violations = bad.len();
    fit.violation_witness = bad.into_iter().next().map(|w| format!("{w} c1={c1:.6e}"));
    Ok(StephenReport { fit, ellipticity, s })
}

/// Gaussian and heat-smoothed vectors for the held-out set of the absorption check.
pub fn stephen_samples(decomp: &SpectralDecomposition, master: u64, tag: &str, count: usize) -> Vec<DVector<f64>> {
    let mut rng = rng_for(master, tag);
    let n = decomp.len();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let g = crate::sampling::gaussian_vector(&mut rng, n);
        if i % 2 == 0 {
            out.push(g);
        } else {
            let t = 10f64.powf(-3.0 + 3.0 * (i as f64 / count.max(1) as f64)) / decomp.values()[0];
            out.push(crate::spectral::semigroup_apply(decomp, t, &g).expect("non-negative time"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_form, measure_ellipticity, OperatorSpec};
    use crate::domain::Grid1D;

    fn setup(m: usize, l: f64, n: usize) -> (FormMatrix, SpectralDecomposition, SpectralDecomposition) {
        let g = Grid1D::new(l, n).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(m).unwrap(), &g).unwrap();
        let d = SpectralDecomposition::from_form(&q).unwrap();
        let lap = SpectralDecomposition::from_form(&assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap()).unwrap();
        (q, d, lap)
    }

    #[test]
    fn identity_case_for_the_laplacian() {
        let (q, d, lap) = setup(1, std::f64::consts::PI, 40);
        let grid = StephenGrid { orders: vec![1], rhos: vec![1e-9], thetas: vec![1e-9], lambdas: vec![0.0] };
        let r = check_stephen(&q, &d, &lap, 1.0, &grid, &[], &stephen_samples(&d, 1, "h", 10)).unwrap();
        assert!((r.fit.constant("c1").unwrap() - 1.0).abs() < 1e-6, "{}", r.fit);
        assert!(r.fit.passed());
    }

    #[test]
    fn untwisted_limit_matches_pencil() {
        let (q, d, lap) = setup(2, 1.0, 40);
        let grid = StephenGrid { orders: vec![1], rhos: vec![1.0], thetas: vec![1e-12], lambdas: vec![0.0] };
        let r = check_stephen(&q, &d, &lap, 1.0, &grid, &[], &[]).unwrap();
        let f = pencil_extremal(&lap, &d, 1).unwrap();
        let m = moments(&lap, &q, 2, String::new(), &f);
        assert!((r.fit.constant("c1").unwrap() - m.lap[0] / m.q).abs() < 1e-8 * m.lap[0] / m.q);
        assert!(m.lap[0] / m.q <= 1.0 / d.values()[0].sqrt() * 1.01);
    }

    #[test]
    fn standard_grid_passes_with_comparable_scale() {
        for (m, l) in [(1usize, std::f64::consts::PI), (2, 1.0)] {
            let (q, d, lap) = setup(m, l, 40);
            let c = measure_ellipticity(&q, q.grid(), m).unwrap().c;
            let grid = StephenGrid::standard(m).unwrap();
            let r = check_stephen(&q, &d, &lap, c, &grid, &stephen_samples(&d, 2, "t", 10), &stephen_samples(&d, 2, "h", 10))
                .unwrap();
            assert!(r.fit.passed(), "{}", r.fit);
            let c1 = r.fit.constant("c1").unwrap();
            assert!(c1 > 0.1 * c && c1 < 10.0 * c, "c1={c1} c={c}");
        }
    }

    #[test]
    fn rejects_bad_orders() {
        let (q, d, lap) = setup(1, 1.0, 20);
        let grid = StephenGrid { orders: vec![2], rhos: vec![1.0], thetas: vec![1.0], lambdas: vec![0.0] };
        assert!(matches!(check_stephen(&q, &d, &lap, 1.0, &grid, &[], &[]), Err(Error::Parameter(_))));
    }
}
