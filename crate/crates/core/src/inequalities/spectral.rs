use nalgebra::DVector;
use rayon::prelude::*;

use super::search::{Range, SweepReport};
use crate::assembly::{difference_matrix, DifferenceOperator};
use crate::error::{Error, Result};
use crate::sampling::{real_samples, smoothed_samples};
use crate::spectral::SpectralDecomposition;

/// Slack factor allowed when the fractional power is replaced by the difference quotient.
pub const DIFFERENCE_SLACK: f64 = 2.0;

/// A test vector together with its squared coefficients in the Laplacian eigenbasis.
#[derive(Debug, Clone)]
pub struct WeightedSample {
    pub label: String,
    pub vector: DVector<f64>,
    /// Single eigenmode index, when the sample is one.
    pub mode: Option<usize>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(lap: &SpectralDecomposition, label: String, vector: DVector<f64>) -> Self {
        let weights = lap.coefficients(&vector).iter().map(|c| c * c).collect();
        Self { label, vector, mode: None, weights }
    }

    pub fn mode(lap: &SpectralDecomposition, k: usize) -> Self {
        let mut weights = vec![0.0; lap.len()];
        weights[k] = 1.0;
        Self { label: format!("φ_{}", k + 1), vector: lap.vectors().column(k).into_owned(), mode: Some(k), weights }
    }

    /// ‖(−Δ_h)^{r/2} f‖².
    pub fn moment(&self, lap: &SpectralDecomposition, r: f64) -> f64 {
        match self.mode {
            Some(k) => lap.values()[k].powf(r),
            None => self.weights.iter().zip(lap.values()).map(|(w, mu)| w * mu.powf(r)).sum(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self.mode {
            Some(_) => 1.0,
            None => self.weights.iter().sum(),
        }
    }
}

/// Every eigenmode, Gaussian vectors and heat-smoothed vectors.
pub fn laplacian_samples(lap: &SpectralDecomposition, master: u64, random: usize, smoothed: usize) -> Vec<WeightedSample> {
    let mut out: Vec<WeightedSample> = (0..lap.len()).map(|k| WeightedSample::mode(lap, k)).collect();
    for (i, f) in real_samples(master, "ineq-random", lap.len(), random).into_iter().enumerate() {
        out.push(WeightedSample::new(lap, format!("rand#{i}"), f));
    }
    for (i, f) in smoothed_samples(lap, master, "ineq-smooth", smoothed, 1e-3, 1.0).into_iter().enumerate() {
        out.push(WeightedSample::new(lap, format!("smooth#{i}"), f));
    }
    out
}

fn pow_abs(x: f64, k: i32) -> f64 {
    x.abs().powi(k)
}

fn merge_all(check: &str, parts: Vec<SweepReport>) -> SweepReport {
    let mut out = SweepReport::new(check);
    for p in parts {
        out.merge(p);
    }
    out
}

/// ‖(−Δ_h)^{q/2} f‖ ≤ μ_1^{(q−p)/2} ‖(−Δ_h)^{p/2} f‖ for every (q, p) pair.
pub fn check_bond(lap: &SpectralDecomposition, pairs: &[(f64, f64)], samples: &[WeightedSample]) -> Result<SweepReport> {
    if let Some(&(q, p)) = pairs.iter().find(|(q, p)| !(*q > 0.0 && q <= p)) {
        return Err(Error::Parameter(format!("bond check needs 0 < q ≤ p, got q={q}, p={p}")));
    }
    let mu1 = lap.spectral_gap()?;
    let parts: Vec<SweepReport> = pairs
        .par_iter()
        .map(|&(q, p)| {
            let c = mu1.powf((q - p) / 2.0);
            let mut r = SweepReport::new("bond");
            for s in samples {
                let lhs = s.moment(lap, q).sqrt();
                let rhs = c * s.moment(lap, p).sqrt();
                r.record(lhs, rhs, || format!("q={q:.6e} p={p:.6e} f={}", s.label));
            }
            r
        })
        .collect();
    Ok(merge_all("bond", parts))
}

/// Random (q, p) pairs with q < p drawn from `range`.
pub fn bond_pairs(range: Range, count: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| {
            let (a, b) = (range.sample(rng), range.sample(rng));
            (a.min(b), a.max(b))
        })
        .collect()
}

/// Parameter grid shared by the mixed-power checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    pub orders: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl PowerGrid {
    pub fn main_default() -> Result<Self> {
        Ok(Self { orders: vec![1, 2, 3], lambdas: Range::log(1e-2, 1e2)?.grid(21), epsilons: Range::log(1e-3, 0.999)?.grid(20) })
    }

    pub fn epsilon_default() -> Result<Self> {
        let mut lambdas = vec![0.0];
        lambdas.extend(Range::log(1e-2, 1e2)?.grid(20));
        Ok(Self { orders: vec![1, 2, 3], lambdas, epsilons: Range::log(1e-3, 1.999)?.grid(20) })
    }
}

/// Both sides of λ^{2(p−r)} μ^r ≤ ε μ^p + ε^{−r/(p−r)} λ^{2p}.
pub fn main_scalar(mu: f64, p: usize, r: usize, lambda: f64, eps: f64) -> (f64, f64) {
    let (pi, ri) = (p as i32, r as i32);
    let lhs = pow_abs(lambda, 2 * (pi - ri)) * mu.powi(ri);
    let rhs = eps * mu.powi(pi) + eps.powf(-(r as f64) / (p - r) as f64) * pow_abs(lambda, 2 * pi);
    (lhs, rhs)
}

/// Scalar reduction on every eigenvalue, then the squared and unsquared vector forms on the samples.
pub fn check_main(lap: &SpectralDecomposition, grid: &PowerGrid, samples: &[WeightedSample]) -> Result<SweepReport> {
    if grid.orders.contains(&0) || grid.epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Parameter("mixed-power check needs p ≥ 1 and ε > 0".into()));
    }
    let combos: Vec<(usize, usize, f64)> =
        grid.orders.iter().flat_map(|&p| (0..p).flat_map(move |r| grid.lambdas.iter().map(move |&l| (p, r, l)))).collect();
    let parts: Vec<SweepReport> = combos
        .par_iter()
        .map(|&(p, r, lam)| {
            let mut rep = SweepReport::new("main");
            let moments: Vec<(f64, f64, f64)> =
                samples.iter().map(|s| (s.moment(lap, r as f64), s.moment(lap, p as f64), s.norm_sq())).collect();
            for &eps in &grid.epsilons {
                for &mu in lap.values() {
                    let (l, rh) = main_scalar(mu, p, r, lam, eps);
                    rep.record(l, rh, || format!("scalar p={p} r={r} λ={lam:.6e} ε={eps:.6e} μ={mu:.6e}"));
                }
                let k = eps.powf(-(r as f64) / (p - r) as f64);
                for (s, &(ar, ap, n)) in samples.iter().zip(&moments) {
                    let lp = pow_abs(lam, (p - r) as i32);
                    let sq_l = lp * lp * ar;
                    let sq_r = eps * ap + k * pow_abs(lam, 2 * p as i32) * n;
                    rep.record(sq_l, sq_r, || format!("squared p={p} r={r} λ={lam:.6e} ε={eps:.6e} f={}", s.label));
                    let l = lp * ar.sqrt();
                    let rh = eps * ap.sqrt() + k * pow_abs(lam, p as i32) * n.sqrt();
                    rep.record(l, rh, || format!("vector p={p} r={r} λ={lam:.6e} ε={eps:.6e} f={}", s.label));
                }
            }
            rep
        })
        .collect();
    Ok(merge_all("main", parts))
}

/// ‖f‖_h of the difference quotient D_h^r f.
fn difference_norm(op: &DifferenceOperator, h: f64, f: &DVector<f64>) -> f64 {
    (op.apply(f).norm_squared() * h).sqrt()
}

/// ‖λ^{p−r} D_h^r f‖ ≤ 2(ε‖(−Δ_h)^{p/2} f‖ + ε^{−r/(p−r)}|λ|^p‖f‖) on vectors from the order-p
/// clamped class: the eigenvectors of `clamped` and heat-smoothed vectors for it.
pub fn check_main_difference(
    lap: &SpectralDecomposition,
    clamped: &SpectralDecomposition,
    grid: &PowerGrid,
    master: u64,
    smoothed: usize,
) -> Result<SweepReport> {
    let p = clamped.m();
    if lap.grid() != clamped.grid() {
        return Err(Error::Contract("clamped and Laplacian decompositions live on different grids".into()));
    }
    let h = lap.grid().h();
    let mut vecs: Vec<(String, DVector<f64>)> =
        (0..clamped.len()).map(|k| (format!("clamped φ_{}", k + 1), clamped.vectors().column(k).into_owned())).collect();
    for (i, f) in smoothed_samples(clamped, master, "ineq-clamped", smoothed, 1e-3, 1.0).into_iter().enumerate() {
        vecs.push((format!("clamped smooth#{i}"), f));
    }
    let samples: Vec<WeightedSample> = vecs.iter().map(|(l, f)| WeightedSample::new(lap, l.clone(), f.clone())).collect();
    let parts: Vec<Result<SweepReport>> = (0..p)
        .into_par_iter()
        .map(|r| {
            let op = difference_matrix(lap.grid(), r)?;
            let mut rep = SweepReport::new("main-difference");
            let pre: Vec<(f64, f64, f64)> = samples
                .iter()
                .map(|s| (difference_norm(&op, h, &s.vector), s.moment(lap, p as f64).sqrt(), s.norm_sq().sqrt()))
                .collect();
            for &lam in &grid.lambdas {
                for &eps in &grid.epsilons {
                    let k = eps.powf(-(r as f64) / (p - r) as f64);
                    for (s, &(dr, ap, n)) in samples.iter().zip(&pre) {
                        let l = pow_abs(lam, (p - r) as i32) * dr;
                        let rh = DIFFERENCE_SLACK * (eps * ap + k * pow_abs(lam, p as i32) * n);
                        rep.record(l, rh, || format!("p={p} r={r} λ={lam:.6e} ε={eps:.6e} f={}", s.label));
                    }
                }
            }
            Ok(rep)
        })
        .collect();
    Ok(merge_all("main-difference", parts.into_iter().collect::<Result<_>>()?))
}

/// Both sides of λ^{2p−r−s} μ^{(r+s)/2} ≤ ε μ^p + 2^{2p−1} ε^{1−2p} λ^{2p}.
pub fn epsilon_scalar(mu: f64, p: usize, r: usize, s: usize, lambda: f64, eps: f64) -> (f64, f64) {
    let pi = p as i32;
    let lhs = pow_abs(lambda, 2 * pi - (r + s) as i32) * mu.powf((r + s) as f64 / 2.0);
    let rhs = eps * mu.powi(pi) + 2f64.powi(2 * pi - 1) * eps.powi(1 - 2 * pi) * pow_abs(lambda, 2 * pi);
    (lhs, rhs)
}

/// Product form with r ≤ p and s ≤ p − 1, for ε below 2.
pub fn check_epsilon(lap: &SpectralDecomposition, grid: &PowerGrid, samples: &[WeightedSample]) -> Result<SweepReport> {
    if grid.epsilons.iter().any(|&e| !(e > 0.0 && e < 2.0)) || grid.orders.contains(&0) {
        return Err(Error::Parameter("product check needs p ≥ 1 and 0 < ε < 2".into()));
    }
    let combos: Vec<(usize, usize, usize, f64)> = grid
        .orders
        .iter()
        .flat_map(|&p| (0..=p).flat_map(move |r| (0..p).flat_map(move |s| grid.lambdas.iter().map(move |&l| (p, r, s, l)))))
        .collect();
    let parts: Vec<SweepReport> = combos
        .par_iter()
        .map(|&(p, r, s, lam)| {
            let mut rep = SweepReport::new("epsilon");
            let pi = p as i32;
            let moments: Vec<(f64, f64, f64, f64)> = samples
                .iter()
                .map(|f| (f.moment(lap, r as f64), f.moment(lap, s as f64), f.moment(lap, p as f64), f.norm_sq()))
                .collect();
            for &eps in &grid.epsilons {
                for &mu in lap.values() {
                    let (l, rh) = epsilon_scalar(mu, p, r, s, lam, eps);
                    rep.record(l, rh, || format!("scalar p={p} r={r} s={s} λ={lam:.6e} ε={eps:.6e} μ={mu:.6e}"));
                }
                let k = 2f64.powi(2 * pi - 1) * eps.powi(1 - 2 * pi) * pow_abs(lam, 2 * pi);
                for (f, &(ar, as_, ap, n)) in samples.iter().zip(&moments) {
                    let l = pow_abs(lam, pi - r as i32) * ar.sqrt() * pow_abs(lam, pi - s as i32) * as_.sqrt();
                    rep.record(l, eps * ap + k * n, || format!("vector p={p} r={r} s={s} λ={lam:.6e} ε={eps:.6e} f={}", f.label));
                }
            }
            rep
        })
        .collect();
    Ok(merge_all("epsilon", parts))
}
