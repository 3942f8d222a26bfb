use nalgebra::DVector;
use rayon::prelude::*;

use super::fitting::log_grid;
use crate::domain::GammaSchedule;
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::spectral::{stencil_derivative, SpectralDecomposition};

pub const SOBOLEV_DRIFT_BUDGET: f64 = 0.15;
const SLACK: f64 = 1e-10;

/// Ratio |f^{(n)}(x)| √ε / (d_x^κ Q(f)^{(1−ε)/2} ‖f‖^ε) at grid index i.
pub fn sobolev_ratio(d: &SpectralDecomposition, schedule: &GammaSchedule, f: &DVector<f64>, i: usize) -> Result<f64> {
    let grid = d.grid();
    let (deriv, _) = stencil_derivative(f.as_slice(), grid.h(), schedule.int_part(), i)?;
    let c = d.coefficients(f);
    let q: f64 = c.iter().zip(d.values()).map(|(ck, mu)| mu * ck * ck).sum();
    let norm = grid.norm(f.as_slice());
    if norm == 0.0 {
        return Err(Error::Domain("Sobolev ratio of the zero function".into()));
    }
    let e = schedule.epsilon();
    let denom = grid.distance_at(i).powf(schedule.frac_part()) * q.powf((1.0 - e) / 2.0) * norm.powf(e);
    Ok(deriv.abs() * e.sqrt() / denom)
}

/// f_ν = Σ ℓ_k φ_k / (μ_k + ν) with ℓ_k the derivative stencil of φ_k at x_i.
pub fn extremal_family(d: &SpectralDecomposition, order: usize, i: usize, nu: &[f64]) -> Result<Vec<DVector<f64>>> {
    let h = d.grid().h();
    let v = d.vectors();
    let ell: Vec<f64> =
        (0..d.len()).map(|k| stencil_derivative(v.column(k).as_slice(), h, order, i).map(|r| r.0)).collect::<Result<_>>()?;
    Ok(nu
        .iter()
        .map(|&n| {
            let c = DVector::from_iterator(d.len(), ell.iter().zip(d.values()).map(|(l, mu)| l / (mu + n)));
            d.synthesize(&c)
        })
        .collect())
}

/// Shift grid s·[10^{−1}, 10^{2.5}] for the extremal family.
pub fn default_shifts(s: f64) -> Vec<f64> {
    log_grid(0.1 * s, 10f64.powf(2.5) * s, 15)
}

/// Least C with |f^{(n)}(x)| ≤ (C/√ε) d_x^κ Q(f)^{(1−ε)/2} ‖f‖^ε, validated on held-out samples.
pub fn sobolev_pointwise_check(
    d: &SpectralDecomposition,
    schedule: &GammaSchedule,
    training: &[DVector<f64>],
    held_out: &[DVector<f64>],
    fractions: &[f64],
) -> Result<FitResult> {
    if schedule.m() != d.m() {
        return Err(Error::Contract("schedule order does not match the operator".into()));
    }
    let grid = d.grid();
    let s = d.spectral_gap()?;
    let mut idx: Vec<usize> = fractions.iter().map(|f| grid.nearest_index(f * grid.length())).collect();
    idx.sort_unstable();
    idx.dedup();
    let shifts = default_shifts(s);

    type Scored = (f64, String);
    let per_x: Vec<Result<(Scored, Vec<Scored>)>> = idx
        .par_iter()
        .map(|&i| {
            let x = grid.point(i);
            let mut best: Scored = (0.0, String::new());
            for (k, f) in extremal_family(d, schedule.int_part(), i, &shifts)?.iter().enumerate() {
                let r = sobolev_ratio(d, schedule, f, i)?;
                if r > best.0 {
                    best = (r, format!("extremal ν={:.4e} x={x:.6}", shifts[k]));
                }
            }
            for (k, f) in training.iter().enumerate() {
                let r = sobolev_ratio(d, schedule, f, i)?;
                if r > best.0 {
                    best = (r, format!("train#{k} x={x:.6}"));
                }
            }
            let held = held_out
                .iter()
                .enumerate()
                .map(|(k, f)| Ok((sobolev_ratio(d, schedule, f, i)?, format!("held#{k} x={x:.6}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok((best, held))
        })
        .collect();

    let mut c = 0.0f64;
    let mut worst = None;
    let mut held = Vec::new();
    for r in per_x {
        let (b, h) = r?;
        if b.0 > c {
            c = b.0;
            worst = Some(b.1);
        }
        held.extend(h);
    }
    let mut fit = FitResult::new(vec![("C".into(), c)], SOBOLEV_DRIFT_BUDGET);
    fit.worst = worst;
    fit.training = idx.len() * (shifts.len() + training.len());
    fit.held_out = held.len();
    let bad: Vec<&(f64, String)> = held.iter().filter(|(r, _)| *r > c * (1.0 + SLACK)).collect();
    fit.violations = bad.len();
    fit.violation_witness = bad.first().map(|(r, w)| format!("{w} ratio={r:.6e} C={c:.6e}"));
    Ok(fit)
}
