use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::modes::numerical_radius;
use super::operator::TwistSpec;
use crate::assembly::{avg_vec, diff_vec, level_positions, FormMatrix};
use crate::domain::MultiIndex;
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::spectral::SpectralDecomposition;

/// Terms of e^{−λψ} D^α e^{λψ} f = Σ_r coefficient · D^r f, top term first.
pub fn leibniz_expand(alpha: &MultiIndex, lambda: f64, a: &[f64]) -> Vec<(MultiIndex, f64)> {
    let mut out: Vec<(MultiIndex, f64)> = alpha
        .lower_set()
        .into_iter()
        .map(|r| {
            let diff = alpha.minus(&r).expect("lower set is dominated");
            let binom = alpha.vector_binomial(&r).expect("lower set is dominated") as f64;
            let dir: f64 = diff.components().iter().zip(a).map(|(&k, &ai)| ai.powi(k as i32)).product();
            (r, binom * lambda.powi(diff.order() as i32) * dir)
        })
        .collect();
    out.reverse();
    out
}

/// Both evaluations of per(λ) = Q_λψ(f) − Q(f).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerLambda {
    /// ⟨H_λ f, f⟩_h − ⟨H f, f⟩_h.
    pub direct: Complex64,
    /// The lowered-index expansion of the discrete product rule.
    pub expansion: Complex64,
    /// |direct − expansion| / max(|direct|, |expansion|).
    pub relative_error: f64,
    /// |direct − expansion| / (|Q_λψ(f)| + Q(f)), the accuracy attainable by a difference.
    pub scaled_error: f64,
}

pub const PER_LAMBDA_TOL: f64 = 1e-8;

/// Q_λψ(f) = ⟨H_λ f, f⟩_h as a sesquilinear form value.
pub fn twisted_form_value(form: &FormMatrix, tw: &TwistSpec, f: &DVector<Complex64>) -> Complex64 {
    let u = tw.apply_e_complex(f);
    let v = tw.apply_e_inv_complex(f);
    let qu = complex_matvec(form.matrix(), &u);
    v.iter().zip(qu.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Σ_ij conj(f_i) Q_ij f_j (e^{λ(ψ_j−ψ_i)} − 1), the entries of Q_λψ − Q without cancellation.
fn perturbation_direct(form: &FormMatrix, tw: &TwistSpec, f: &DVector<Complex64>) -> Complex64 {
    if tw.lambda() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let q = form.matrix();
    let n = q.nrows();
    let rate = tw.lambda() * tw.direction() * form.grid().h();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let qij = q[(i, j)];
            if qij != 0.0 {
                acc += f[i].conj() * f[j] * (qij * (rate * (j as f64 - i as f64)).exp_m1());
            }
        }
    }
    acc
}

pub(crate) fn complex_matvec(m: &DMatrix<f64>, f: &DVector<Complex64>) -> DVector<Complex64> {
    let re = m * f.map(|z| z.re);
    let im = m * f.map(|z| z.im);
    re.zip_map(&im, Complex64::new)
}

pub(crate) fn form_value(form: &FormMatrix, f: &DVector<Complex64>) -> f64 {
    let qf = complex_matvec(form.matrix(), f);
    f.iter().zip(qf.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// per(λ) by direct conjugation, cross-checked against the product-rule expansion.
pub fn per_lambda(form: &FormMatrix, tw: &TwistSpec, f: &DVector<Complex64>) -> Result<PerLambda> {
    if f.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::Domain("per(λ) needs a nonzero grid function".into()));
    }
    tw.check_conditioning()?;
    let q_lambda = twisted_form_value(form, tw, f);
    let q0 = form_value(form, f);
    let direct = perturbation_direct(form, tw, f);
    let expansion = per_lambda_expansion(form, tw, f)?;
    let diff = (direct - expansion).norm();
    let relative_error = if diff == 0.0 { 0.0 } else { diff / direct.norm().max(expansion.norm()) };
    let scaled_error = if diff == 0.0 { 0.0 } else { diff / (q_lambda.norm() + q0.abs()) };
    if scaled_error > PER_LAMBDA_TOL {
        return Err(Error::Consistency(format!(
            "per(λ) paths disagree: direct={direct:.12e}, expansion={expansion:.12e}, scaled error {scaled_error:.3e}"
        )));
    }
    Ok(PerLambda { direct, expansion, relative_error, scaled_error })
}

/// Coefficients of the conjugated lift e^{∓λψ} A^{top−k} D^k e^{±λψ} in the basis A^{top−r} D^r.
fn conjugated_lift(k: usize, top: usize, c: f64, lt: f64, kap: f64) -> Vec<f64> {
    let mut p = vec![1.0];
    let step = |p: &[f64], keep: f64, raise: f64| {
        let mut q = vec![0.0; p.len() + 1];
        for (r, &v) in p.iter().enumerate() {
            q[r] += keep * v;
            q[r + 1] += raise * v;
        }
        q
    };
    for _ in 0..k {
        p = step(&p, lt, c);
    }
    for _ in k..top {
        p = step(&p, c, kap);
    }
    p
}

fn per_lambda_expansion(form: &FormMatrix, tw: &TwistSpec, f: &DVector<Complex64>) -> Result<Complex64> {
    let spec = form.spec().ok_or_else(|| Error::Contract("per(λ) expansion needs the coefficient table of the form".into()))?;
    let grid = form.grid();
    let h = grid.h();
    let l = grid.length();
    let b = tw.lambda() * tw.direction() * h / 2.0;
    let c = b.cosh();
    let lt = 2.0 * b.sinh() / h;
    let kap = lt * h * h / 4.0;
    let m = spec.m();

    // basis[top][r] = A^{top−r} D^r f / h^r at level `top`
    let mut basis: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(m + 1);
    for top in 0..=m {
        let mut row = Vec::with_capacity(top + 1);
        for r in 0..=top {
            let mut g: Vec<Complex64> = f.iter().copied().collect();
            for _ in 0..r {
                g = diff_vec(&g).into_iter().map(|z| z / h).collect();
            }
            for _ in r..top {
                g = avg_vec(&g);
            }
            row.push(g);
        }
        basis.push(row);
    }

    let mut total = Complex64::new(0.0, 0.0);
    for (&(i, j), coef) in spec.entries() {
        let top = i.max(j);
        let w: Vec<f64> = level_positions(grid, top).into_iter().map(|x| coef.eval(x.clamp(0.0, l))).collect();
        let plus = conjugated_lift(j, top, c, lt, kap);
        // c^{2·top} − 1 with cosh b − 1 = 2 sinh²(b/2)
        let top_weight = (2.0 * top as f64 * (2.0 * (b / 2.0).sinh().powi(2)).ln_1p()).exp_m1();
        let minus = conjugated_lift(i, top, c, -lt, -kap);
        for (r, &gp) in plus.iter().enumerate() {
            for (s, &gm) in minus.iter().enumerate() {
                let weight = if r == j && s == i { top_weight } else { gp * gm };
                if weight == 0.0 {
                    continue;
                }
                let x: Complex64 =
                    w.iter().zip(basis[top][r].iter().zip(&basis[top][s])).map(|(we, (u, v))| *we * u * v.conj()).sum();
                total += x * (weight * h);
            }
        }
    }
    Ok(total)
}

/// λ, θ and ε values swept by the perturbation fit.
#[derive(Debug, Clone)]
pub struct PerturbationGrid {
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl Default for PerturbationGrid {
    fn default() -> Self {
        Self {
            lambdas: vec![0.25, 0.5, 1.0, 1.5, 2.0],
            thetas: vec![0.1, 0.5, 1.0, 5.0],
            epsilons: vec![0.05, 0.1, 0.3, 0.6, 0.9],
        }
    }
}

/// Modes used for the extremal training directions.
const EXTREMAL_MODES: usize = 8;

/// Smallest c1 with |per(λ)| ≤ c1 ε(1+θ) Q(f) + c1 ε^{1−2m}((1+θs)λ)^{2m}‖f‖².
pub fn form_perturbation_bound_fit(
    form: &FormMatrix,
    decomp: &SpectralDecomposition,
    template: &TwistSpec,
    grid: &PerturbationGrid,
    training: &[DVector<Complex64>],
    held_out: &[DVector<Complex64>],
) -> Result<FitResult> {
    let m = form.m() as i32;
    let s = decomp.spectral_gap()?;
    let h = form.grid().h();
    if grid.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) || grid.thetas.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Parameter("perturbation fit needs 0 < ε < 1 and θ > 0".into()));
    }
    let norms = |set: &[DVector<Complex64>]| -> Vec<(f64, f64)> {
        set.iter().map(|f| (form_value(form, f), h * f.iter().map(|z| z.norm_sqr()).sum::<f64>())).collect()
    };
    let train_nq = norms(training);
    let held_nq = norms(held_out);
    let rhs = |q: f64, n2: f64, lam: f64, th: f64, ep: f64| {
        ep * (1.0 + th) * q + ep.powi(1 - 2 * m) * ((1.0 + th * s) * lam).powi(2 * m) * n2
    };

    struct LambdaOut {
        best: (f64, String),
        held: Vec<(f64, String)>,
    }

    let per_lambda_results: Vec<Result<LambdaOut>> = grid
        .lambdas
        .par_iter()
        .map(|&lam| {
            let tw = template.with_lambda(lam)?;
            let pers = |set: &[DVector<Complex64>]| -> Result<Vec<f64>> {
                set.iter().map(|f| Ok(per_lambda(form, &tw, f)?.direct.norm())).collect()
            };
            let train_per = pers(training)?;
            let held_per = pers(held_out)?;
            let k = EXTREMAL_MODES.min(decomp.len());
            let phi = decomp.vectors().columns(0, k).into_owned();
            let twisted = super::operator::conjugate(&form.operator(), &tw)?;
            let pk = phi.transpose() * (twisted.matrix() - twisted.base()) * &phi * h;
            let mut best = (0.0f64, String::new());
            let mut held = Vec::new();
            for &th in &grid.thetas {
                for &ep in &grid.epsilons {
                    let label = |kind: &str, idx: usize| format!("{kind}#{idx} λ={lam} θ={th} ε={ep}");
                    for (idx, (p, (q, n2))) in train_per.iter().zip(&train_nq).enumerate() {
                        let r = p / rhs(*q, *n2, lam, th, ep);
                        if r > best.0 {
                            best = (r, label("train", idx));
                        }
                    }
                    let diag: Vec<f64> = (0..k).map(|i| rhs(decomp.values()[i], 1.0, lam, th, ep)).collect();
                    if lam != 0.0 {
                        let (_, z) = numerical_radius(&pk, &diag)?;
                        let f = DVector::from_fn(decomp.len(), |i, _| (0..k).map(|c| z[c] * phi[(i, c)]).sum::<Complex64>());
                        let p = per_lambda(form, &tw, &f)?.direct.norm();
                        let q = form_value(form, &f);
                        let n2 = h * f.iter().map(|z| z.norm_sqr()).sum::<f64>();
                        let r = p / rhs(q, n2, lam, th, ep);
                        if r > best.0 {
                            best = (r, label("extremal", 0));
                        }
                    }
                    for (idx, (p, (q, n2))) in held_per.iter().zip(&held_nq).enumerate() {
                        held.push((p / rhs(*q, *n2, lam, th, ep), label("held", idx)));
                    }
                }
            }
            Ok(LambdaOut { best, held })
        })
        .collect();

    let mut c1 = 0.0f64;
    let mut worst = None;
    let mut all_held = Vec::new();
    for out in per_lambda_results {
        let out = out?;
        if out.best.0 > c1 {
            c1 = out.best.0;
            worst = Some(out.best.1);
        }
        all_held.extend(out.held);
    }
    let mut fit = FitResult::new(vec![("c1".into(), c1)], 0.15);
    fit.worst = worst;
    fit.training = training.len() * grid.lambdas.len() * grid.thetas.len() * grid.epsilons.len();
    fit.held_out = all_held.len();
    let bad: Vec<&(f64, String)> = all_held.iter().filter(|(r, _)| *r > c1 * (1.0 + 1e-10)).collect();
    fit.violations = bad.len();
    fit.violation_witness = bad.first().map(|(r, w)| format!("{w} ratio={r:.6e}"));
    Ok(fit)
}
