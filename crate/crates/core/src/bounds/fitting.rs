use rayon::prelude::*;

use super::envelope::{BoundEnvelope, EnvelopeVariant};
use crate::domain::GammaSchedule;
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::spectral::HeatKernelEvaluator;

/// Kernel values below this fraction of the largest diagonal value are round-off.
pub const NOISE_FLOOR: f64 = 1e-10;
/// Fits start at this multiple of the resolvable-time floor.
pub const FLOOR_MARGIN: f64 = 10.0;
pub const ENVELOPE_DRIFT_BUDGET: f64 = 0.10;

/// Sample positions, times and c2 candidates for an envelope fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeGrid {
    /// Positions as fractions of the interval length; every pair x ≤ y is sampled.
    pub fractions: Vec<f64>,
    pub times: Vec<f64>,
    /// Extra short-time slices only resolvable on the refined mesh.
    pub refined_times: Vec<f64>,
    pub c2_grid: Vec<f64>,
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect()
}

const PER_DECADE: f64 = 6.0;

impl EnvelopeGrid {
    /// Times from 10× the coarse floor up to 2/s, refined slices down to 10× the fine floor.
    pub fn standard(coarse: &HeatKernelEvaluator<'_>, fine: Option<&HeatKernelEvaluator<'_>>) -> Result<Self> {
        let s = coarse.decomposition().spectral_gap()?;
        let lo = FLOOR_MARGIN * coarse.floor();
        let hi = 2.0 / s;
        if lo >= hi {
            return Err(Error::Config(format!("short-time window [{lo:.3e}, {hi:.3e}] is empty")));
        }
        let count = ((hi / lo).log10() * PER_DECADE).ceil() as usize + 1;
        let times = log_grid(lo, hi, count);
        let step = (hi / lo).powf(1.0 / (count - 1) as f64);
        let mut refined_times = Vec::new();
        if let Some(f) = fine {
            let flo = FLOOR_MARGIN * f.floor();
            let mut t = lo / step;
            while t >= flo {
                refined_times.push(t);
                t /= step;
            }
            refined_times.reverse();
        }
        Ok(Self {
            fractions: vec![0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95],
            times,
            refined_times,
            c2_grid: log_grid(1e-3, 1.0, 31),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    t: f64,
    x: f64,
    y: f64,
    /// ln|k| − ln(envelope with c1 = 1, c2 = 0).
    base: f64,
    /// |x−y|^{2m/(2m−1)} / τ^{1/(2m−1)}.
    gauss: f64,
}

fn collect(
    ev: &HeatKernelEvaluator<'_>,
    schedule: &GammaSchedule,
    variant: EnvelopeVariant,
    fractions: &[f64],
    times: &[f64],
) -> Result<(Vec<Sample>, usize)> {
    let d = ev.decomposition();
    let grid = d.grid();
    let s = d.spectral_gap()?;
    if let Some(&t) = times.iter().find(|&&t| t < ev.floor()) {
        return Err(Error::Domain(format!("sample time {t:.3e} lies below the resolvable floor {:.3e}", ev.floor())));
    }
    let mut idx: Vec<usize> = fractions.iter().map(|f| grid.nearest_index(f * grid.length())).collect();
    idx.sort_unstable();
    idx.dedup();
    let template = BoundEnvelope::new(*schedule, s, 1.0, 1.0)?.with_variant(variant);
    let n = d.len();
    let per_t: Vec<Result<(Vec<Sample>, usize)>> = times
        .par_iter()
        .map(|&t| {
            let diag_max = (0..n).map(|i| ev.value(t, i, i)).fold(0.0f64, f64::max);
            let mut out = Vec::new();
            let mut excluded = 0;
            for (a, &i) in idx.iter().enumerate() {
                for &j in &idx[a..] {
                    let k = ev.value(t, i, j).abs();
                    if k < NOISE_FLOOR * diag_max {
                        excluded += 1;
                        continue;
                    }
                    let (x, y) = (grid.point(i), grid.point(j));
                    let (dx, dy) = (grid.distance_at(i), grid.distance_at(j));
                    let with_c2 = template.ln_eval(t, x, y, dx, dy)?;
                    let no_gauss = BoundEnvelope::new(*schedule, s, 1.0, f64::MIN_POSITIVE)?
                        .with_variant(variant)
                        .ln_eval(t, x, y, dx, dy)?;
                    out.push(Sample { t, x, y, base: k.ln() - no_gauss, gauss: no_gauss - with_c2 });
                }
            }
            Ok((out, excluded))
        })
        .collect();
    let mut all = Vec::new();
    let mut excluded = 0;
    for r in per_t {
        let (v, e) = r?;
        all.extend(v);
        excluded += e;
    }
    Ok((all, excluded))
}

fn sup_ratio(samples: &[Sample], c2: f64) -> (f64, Option<Sample>) {
    samples.iter().fold((f64::NEG_INFINITY, None), |(best, at), s| {
        let v = s.base + c2 * s.gauss;
        if v > best {
            (v, Some(*s))
        } else {
            (best, at)
        }
    })
}

/// Fitted envelope constants and the c1*(c2) profile.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFit {
    pub fit: FitResult,
    pub c1: f64,
    pub c2: f64,
    pub profile: Vec<(f64, f64)>,
    /// c1 on the refined mesh at the same c2, when measured.
    pub refined_c1: Option<f64>,
}

/// Grid search over c2 for the least c1 with |k| ≤ envelope on the samples, rechecked on a refined mesh.
pub fn fit_envelope_constants(
    coarse: &HeatKernelEvaluator<'_>,
    fine: Option<&HeatKernelEvaluator<'_>>,
    schedule: &GammaSchedule,
    variant: EnvelopeVariant,
    grid: &EnvelopeGrid,
) -> Result<EnvelopeFit> {
    if grid.c2_grid.is_empty() || grid.times.is_empty() || grid.fractions.is_empty() {
        return Err(Error::Config("envelope grid needs times, positions and c2 candidates".into()));
    }
    if grid.c2_grid.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::Parameter("c2 candidates must be positive".into()));
    }
    let (samples, excluded) = collect(coarse, schedule, variant, &grid.fractions, &grid.times)?;
    if samples.is_empty() {
        return Err(Error::Config("every envelope sample fell below the noise floor".into()));
    }
    let m = schedule.m() as f64;
    let tilt = (2.0 * m - 1.0) * schedule.dim() as f64 / (2.0 * m);
    let profile: Vec<(f64, f64, Option<Sample>)> = grid
        .c2_grid
        .iter()
        .map(|&c2| {
            let (v, at) = sup_ratio(&samples, c2);
            (c2, v, at)
        })
        .collect();
    let (c2, ln_c1, at) = profile
        .iter()
        .min_by(|a, b| (a.1 - tilt * a.0.ln()).total_cmp(&(b.1 - tilt * b.0.ln())))
        .copied()
        .expect("non-empty c2 grid");
    let c1 = ln_c1.exp();
    let mut fit = FitResult::new(vec![("c1".into(), c1), ("c2".into(), c2)], ENVELOPE_DRIFT_BUDGET);
    fit.training = samples.len();
    fit.excluded = excluded;
    fit.worst = at.map(|s| format!("t={:.6e} x={:.6} y={:.6}", s.t, s.x, s.y));
    let mut refined_c1 = None;
    if let Some(f) = fine {
        let mut times = grid.refined_times.clone();
        times.extend_from_slice(&grid.times);
        let (fs, fex) = collect(f, schedule, variant, &grid.fractions, &times)?;
        let (ln_f, _) = sup_ratio(&fs, c2);
        let c1f = ln_f.exp();
        refined_c1 = Some(c1f);
        fit.drift = Some(crate::fit::relative_drift(c1, c1f));
        fit.held_out = fs.len();
        fit.excluded += fex;
        let limit = ln_c1 + (1.0 + ENVELOPE_DRIFT_BUDGET).ln();
        let bad: Vec<&Sample> = fs.iter().filter(|s| s.base + c2 * s.gauss > limit).collect();
        fit.violations = bad.len();
        fit.violation_witness = bad
            .first()
            .map(|s| format!("t={:.6e} x={:.6} y={:.6} ratio={:.6e} c1={c1:.6e}", s.t, s.x, s.y, (s.base + c2 * s.gauss).exp()));
    }
    Ok(EnvelopeFit { fit, c1, c2, profile: profile.iter().map(|p| (p.0, p.1.exp())).collect(), refined_c1 })
}
