use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::operator::TwistSpec;
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::sampling::{gaussian_vector, rng_for};
use crate::spectral::{semigroup_apply, top_eigenpair, HeatKernelEvaluator, SpectralDecomposition, EXP_CUTOFF};

pub const TWISTED_KERNEL_TOL: f64 = 1e-10;

/// e^{−λψ(x_i)} k(t, x_i, x_j) e^{λψ(x_j)}, cross-checked against E^{−1} e^{−Ht} E δ_j.
pub fn twisted_kernel(ev: &HeatKernelEvaluator<'_>, tw: &TwistSpec, t: f64, i: usize, j: usize) -> Result<f64> {
    tw.check_conditioning()?;
    let k = ev.eval(t, i, j)?.value;
    let fac = tw.factor(i, j);
    let value = k * fac;
    let d = ev.decomposition();
    let n = d.len();
    let h = d.grid().h();
    let delta = DVector::from_fn(n, |r, _| if r == j { 1.0 / h } else { 0.0 });
    let col = semigroup_apply(d, t, &tw.apply_e(&delta))?;
    let similar = tw.apply_e_inv(&col)[i];
    let scale = fac * ev.absolute_scale(t, i, j);
    let err = if scale == 0.0 { (similar - value).abs() } else { (similar - value).abs() / scale };
    if err > TWISTED_KERNEL_TOL {
        return Err(Error::Consistency(format!(
            "twisted kernel paths disagree at t={t}, i={i}, j={j}: {value:.12e} vs {similar:.12e}"
        )));
    }
    Ok(value)
}

/// Euclidean matrix of E^{−1} g(H) E for a spectral multiplier g.
pub fn twisted_function(d: &SpectralDecomposition, tw: &TwistSpec, g: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    tw.check_conditioning()?;
    let u = d.euclidean_vectors();
    let mut scaled = u.clone();
    for (k, &mu) in d.values().iter().enumerate() {
        scaled.column_mut(k).scale_mut(g(mu));
    }
    let mut p = scaled * u.transpose();
    if tw.lambda() != 0.0 {
        let n = p.nrows();
        for j in 0..n {
            for i in 0..n {
                p[(i, j)] *= tw.factor(i, j);
            }
        }
    }
    Ok(p)
}

/// e^{−Ĥ_λ t} = E^{−1} e^{−(H−s)t} E.
pub fn twisted_propagator(d: &SpectralDecomposition, tw: &TwistSpec, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("propagator time must be non-negative, got {t}")));
    }
    let s = d.spectral_gap()?;
    twisted_function(d, tw, |mu| {
        let x = (mu - s) * t;
        if x > EXP_CUTOFF {
            0.0
        } else {
            (-x).exp()
        }
    })
}

const LANCZOS_STEPS: usize = 160;

/// Largest singular value by Lanczos on MᵀM.
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.ncols();
    if n == 0 {
        return Ok(0.0);
    }
    let start = gaussian_vector(&mut rng_for(0x5eed, "operator-norm"), n);
    let mt = m.transpose();
    let (top, _) = top_eigenpair(start, LANCZOS_STEPS, |v| &mt * (m * v))?;
    Ok(top.max(0.0).sqrt())
}

/// K = (1+s)^{2m} λ^{2m}.
pub fn twist_scale(s: f64, m: usize, lambda: f64) -> f64 {
    let e = 2 * m as i32;
    (1.0 + s).powi(e) * lambda.powi(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub t: f64,
    pub norm: f64,
    /// ln‖·‖ / (K t), zero when λ = 0.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupNormFit {
    pub rows: Vec<NormRow>,
    pub fit: FitResult,
}

impl SemigroupNormFit {
    pub fn c(&self) -> f64 {
        self.fit.constant("c").unwrap_or(0.0)
    }
}

/// Slack for norms that should equal one exactly.
const UNIT_SLACK: f64 = 1e-10;

fn validate_times(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("time grid must be non-empty and positive".into()));
    }
    Ok(())
}

/// Least c with ln‖e^{−Ĥ_λ t}‖ ≤ c(1+s)^{2m}λ^{2m}t on the grid, validated at geometric midpoints.
pub fn twisted_semigroup_norm_fit(d: &SpectralDecomposition, tw: &TwistSpec, t_grid: &[f64]) -> Result<SemigroupNormFit> {
    validate_times(t_grid)?;
    let s = d.spectral_gap()?;
    let k = twist_scale(s, d.m(), tw.lambda());
    let norms = |ts: &[f64]| -> Result<Vec<(f64, f64)>> {
        ts.par_iter().map(|&t| Ok((t, operator_norm(&twisted_propagator(d, tw, t)?)?))).collect()
    };
    let rate = |t: f64, nrm: f64| if k == 0.0 { 0.0 } else { nrm.ln() / (k * t) };
    let rows: Vec<NormRow> = norms(t_grid)?.into_iter().map(|(t, norm)| NormRow { t, norm, rate: rate(t, norm) }).collect();

    let mut fit;
    if k == 0.0 {
        fit = FitResult::new(vec![("c".into(), 0.0)], 0.15);
        let worst = rows.iter().max_by(|a, b| a.norm.total_cmp(&b.norm)).expect("non-empty");
        fit.worst = Some(format!("t={:.6e} norm={:.16e}", worst.t, worst.norm));
        let bad: Vec<&NormRow> = rows.iter().filter(|r| r.norm > 1.0 + UNIT_SLACK).collect();
        fit.violations = bad.len();
        fit.violation_witness = bad.first().map(|r| format!("t={:.6e} norm={:.16e}", r.t, r.norm));
    } else {
        let worst = rows.iter().max_by(|a, b| a.rate.total_cmp(&b.rate)).expect("non-empty");
        let c = worst.rate.max(0.0);
        fit = FitResult::new(vec![("c".into(), c)], 0.15);
        fit.worst = Some(format!("t={:.6e} λ={}", worst.t, tw.lambda()));
        let mut sorted: Vec<f64> = t_grid.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mids: Vec<f64> = sorted.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        let held = norms(&mids)?;
        fit.held_out = held.len();
        let bad: Vec<&(f64, f64)> =
            held.iter().filter(|(t, nrm)| nrm.ln() > c * k * t * (1.0 + UNIT_SLACK) + UNIT_SLACK).collect();
        fit.violations = bad.len();
        fit.violation_witness = bad.first().map(|(t, nrm)| format!("t={t:.6e} norm={nrm:.16e} λ={}", tw.lambda()));
    }
    fit.training = rows.len();
    Ok(SemigroupNormFit { rows, fit })
}

/// Per-time statistics of the evolved twisted form check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvedTwistRow {
    pub t: f64,
    /// sup_f Q(e^{−Ĥ_λ t} f) / ‖f‖².
    pub form_sup: f64,
    /// ‖Ĥ_λ e^{−Ĥ_λ t}‖.
    pub analytic_norm: f64,
    /// ‖e^{−Ĥ_λ t}‖.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedTwistReport {
    pub rows: Vec<EvolvedTwistRow>,
    /// Constants c1, c2 and the analytic-bound constants c2' for β = 0 and β = 1.
    pub fit: FitResult,
}

const EVOLVED_SLACK: f64 = 1e-10;

/// Fits Q(e^{−H_λ t}f) ≤ (c1/(αt)) e^{c2 K t − 2st}‖f‖² with c2 = 2(1+α)c, where c is the fitted
/// semigroup-norm constant, and the analytic bound
/// ‖Ĥ_λ e^{−Ĥ_λ t}‖ + βK‖e^{−Ĥ_λ t}‖ ≤ (c2'/(αt)) e^{c(1+α)Kt}.
#[allow(clippy::too_many_arguments)]
pub fn evolved_twisted_form_check(
    d: &SpectralDecomposition,
    tw: &TwistSpec,
    alpha: f64,
    c: f64,
    t_grid: &[f64],
    training: &[DVector<f64>],
    held_out: &[DVector<f64>],
) -> Result<EvolvedTwistReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("α must lie in (0, 1), got {alpha}")));
    }
    validate_times(t_grid)?;
    let s = d.spectral_gap()?;
    let k = twist_scale(s, d.m(), tw.lambda());
    let c2 = 2.0 * (1.0 + alpha) * c;
    let u = d.euclidean_vectors();
    let sqrt_mu = DVector::from_iterator(d.len(), d.values().iter().map(|v| v.max(0.0).sqrt()));

    struct PerTime {
        row: EvolvedTwistRow,
        train_best: (f64, String),
        held: Vec<(f64, String)>,
    }

    let per_time: Vec<Result<PerTime>> = t_grid
        .par_iter()
        .map(|&t| {
            let prop = twisted_propagator(d, tw, t)?;
            let mut b = u.tr_mul(&prop);
            for (r, w) in sqrt_mu.iter().enumerate() {
                b.row_mut(r).scale_mut(*w);
            }
            let form_sup = operator_norm(&b)?.powi(2);
            let analytic = twisted_function(d, tw, |mu| {
                let x = (mu - s) * t;
                if x > EXP_CUTOFF {
                    0.0
                } else {
                    (mu - s) * (-x).exp()
                }
            })?;
            let row = EvolvedTwistRow { t, form_sup, analytic_norm: operator_norm(&analytic)?, norm: operator_norm(&prop)? };
            let weight = alpha * t * (-c2 * k * t).exp();
            let ratio = |f: &DVector<f64>| weight * (&b * f).norm_squared() / (f.norm_squared());
            let mut train_best = (weight * form_sup, format!("extremal t={t:.6e}"));
            for (idx, f) in training.iter().enumerate() {
                let r = ratio(f);
                if r > train_best.0 {
                    train_best = (r, format!("train#{idx} t={t:.6e}"));
                }
            }
            let held = held_out.iter().enumerate().map(|(idx, f)| (ratio(f), format!("held#{idx} t={t:.6e}"))).collect();
            Ok(PerTime { row, train_best, held })
        })
        .collect();

    let mut rows = Vec::with_capacity(t_grid.len());
    let mut c1 = 0.0f64;
    let mut worst = None;
    let mut held = Vec::new();
    for p in per_time {
        let p = p?;
        rows.push(p.row);
        if p.train_best.0 > c1 {
            c1 = p.train_best.0;
            worst = Some(p.train_best.1);
        }
        held.extend(p.held);
    }
    let analytic_constant = |beta: f64| {
        rows.iter()
            .map(|r| alpha * r.t * (-c * (1.0 + alpha) * k * r.t).exp() * (r.analytic_norm + beta * k * r.norm))
            .fold(0.0f64, f64::max)
    };
    let mut fit = FitResult::new(
        vec![
            ("c1".into(), c1),
            ("c2".into(), c2),
            ("c2'(β=0)".into(), analytic_constant(0.0)),
            ("c2'(β=1)".into(), analytic_constant(1.0)),
        ],
        0.15,
    );
    fit.worst = worst;
    fit.training = rows.len() * (training.len() + 1);
    fit.held_out = held.len();
    let bad: Vec<&(f64, String)> = held.iter().filter(|(r, _)| *r > c1 * (1.0 + EVOLVED_SLACK)).collect();
    fit.violations = bad.len();
    fit.violation_witness = bad.first().map(|(r, w)| format!("{w} λ={} ratio={r:.6e} c1={c1:.6e}", tw.lambda()));
    Ok(EvolvedTwistReport { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_form, OperatorSpec};
    use crate::domain::Grid1D;
    use crate::sampling::real_samples;
    use crate::spectral::HeatKernelEvaluator;

    fn laplace(n: usize) -> SpectralDecomposition {
        let g = Grid1D::new(std::f64::consts::PI, n).unwrap();
        SpectralDecomposition::from_form(&assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap()).unwrap()
    }

    #[test]
    fn twisted_kernel_identities() {
        let d = laplace(60);
        let ev = HeatKernelEvaluator::new(&d);
        let tw = TwistSpec::centered(d.grid(), 1.3).unwrap();
        let flip = TwistSpec::new(d.grid(), d.grid().length() / 2.0, -1.0, -1.3).unwrap();
        for (i, j) in [(3, 40), (20, 20), (59, 0)] {
            let a = twisted_kernel(&ev, &tw, 0.2, i, j).unwrap();
            let b = twisted_kernel(&ev, &flip, 0.2, i, j).unwrap();
            assert!((a - b).abs() <= 1e-14 * a.abs());
        }
        let zero = TwistSpec::centered(d.grid(), 0.0).unwrap();
        assert_eq!(twisted_kernel(&ev, &zero, 0.3, 5, 9).unwrap(), ev.value(0.3, 5, 9));
        assert_eq!(twisted_kernel(&ev, &tw, 0.3, 7, 7).unwrap(), ev.value(0.3, 7, 7));
    }

    #[test]
    fn untwisted_norm_is_one() {
        let d = laplace(40);
        let tw = TwistSpec::centered(d.grid(), 0.0).unwrap();
        let fit = twisted_semigroup_norm_fit(&d, &tw, &[0.01, 0.1, 1.0]).unwrap();
        assert_eq!(fit.c(), 0.0);
        assert!(fit.rows.iter().all(|r| (r.norm - 1.0).abs() < 1e-10), "{:?}", fit.rows);
        assert!(fit.fit.passed());
    }

    #[test]
    fn lanczos_norm_matches_dense() {
        let d = laplace(30);
        let tw = TwistSpec::centered(d.grid(), 1.0).unwrap();
        let p = twisted_propagator(&d, &tw, 0.05).unwrap();
        let dense = crate::spectral::eigh(&(p.transpose() * &p)).unwrap();
        let exact = dense.values.last().unwrap().sqrt();
        assert!((operator_norm(&p).unwrap() - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn norm_fit_is_finite_and_stable() {
        let ts: Vec<f64> = (0..8).map(|k| 0.01 * 10f64.powf(k as f64 * 2.0 / 7.0)).collect();
        let mut cs = Vec::new();
        for n in [100, 200] {
            let d = laplace(n);
            let tw = TwistSpec::centered(d.grid(), 1.0).unwrap();
            let fit = twisted_semigroup_norm_fit(&d, &tw, &ts).unwrap();
            assert!(fit.fit.passed(), "{}", fit.fit);
            assert!(fit.c() > 0.0 && fit.c() < 1.0);
            cs.push(fit.c());
        }
        assert!(crate::fit::relative_drift(cs[0], cs[1]) < 0.15);
    }

    #[test]
    fn single_mode_evolved_form() {
        let d = laplace(50);
        let s = d.spectral_gap().unwrap();
        let tw = TwistSpec::centered(d.grid(), 0.0).unwrap();
        let phi1 = d.vectors().column(0).into_owned();
        let ts = [0.1, 0.5, 1.0, 2.0];
        let rep = evolved_twisted_form_check(&d, &tw, 0.5, 0.0, &ts, &[], &[phi1]).unwrap();
        assert!(rep.fit.passed(), "{}", rep.fit);
        let c1 = rep.fit.constant("c1").unwrap();
        assert!(c1 >= s * 0.5 * 2.0 * (1.0 - 1e-10));
        assert!(rep.rows.iter().all(|r| (r.norm - 1.0).abs() < 1e-10));
    }

    #[test]
    fn evolved_form_with_twist() {
        let d = laplace(60);
        let tw = TwistSpec::centered(d.grid(), 1.0).unwrap();
        let ts = [0.02, 0.1, 0.5, 2.0];
        let c = twisted_semigroup_norm_fit(&d, &tw, &ts).unwrap().c();
        let train = real_samples(1, "tr", 60, 10);
        let held = real_samples(1, "ho", 60, 10);
        let rep = evolved_twisted_form_check(&d, &tw, 0.5, c, &ts, &train, &held).unwrap();
        assert!(rep.fit.passed(), "{}", rep.fit);
        let small = &rep.rows[0];
        assert!(small.form_sup * small.t < 1.0);
        let b0 = rep.fit.constant("c2'(β=0)").unwrap();
        let b1 = rep.fit.constant("c2'(β=1)").unwrap();
        assert!(b1 >= b0 && b0 > 0.0);
    }
}
