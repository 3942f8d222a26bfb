use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::decomposition::SpectralDecomposition;
use super::stencil::stencil_derivative;
use crate::domain::GTildeFn;
use crate::error::{Error, Result};

/// Terms with μ·t above this are dropped from every eigen-expansion.
pub const EXP_CUTOFF: f64 = 700.0;

/// A kernel value together with the resolvable-time flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub below_floor: bool,
}

/// Heat kernel by eigen-expansion, indexed by interior grid indices.
#[derive(Debug, Clone, Copy)]
pub struct HeatKernelEvaluator<'a> {
    decomp: &'a SpectralDecomposition,
}

impl<'a> HeatKernelEvaluator<'a> {
    pub fn new(decomp: &'a SpectralDecomposition) -> Self {
        Self { decomp }
    }

    pub fn decomposition(&self) -> &'a SpectralDecomposition {
        self.decomp
    }

    /// The resolvable-time floor h^{2m}.
    pub fn floor(&self) -> f64 {
        self.decomp.grid().time_floor(self.decomp.m())
    }

    /// Number of leading modes kept at time t.
    pub fn active_modes(&self, t: f64) -> usize {
        self.decomp.values().iter().take_while(|&&mu| mu * t <= EXP_CUTOFF).count()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("kernel time must be positive, got {t}")));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, i: usize, j: usize) -> Result<KernelValue> {
        self.check_time(t)?;
        let n = self.decomp.len();
        if i >= n || j >= n {
            return Err(Error::Domain(format!("grid index out of range: ({i}, {j}) with n={n}")));
        }
        Ok(KernelValue { value: self.value(t, i, j), below_floor: t < self.floor() })
    }

    /// Raw value without checks.
    pub fn value(&self, t: f64, i: usize, j: usize) -> f64 {
        let v = self.decomp.vectors();
        let r = self.active_modes(t);
        let mut acc = 0.0;
        for (k, &mu) in self.decomp.values()[..r].iter().enumerate() {
            acc += (-mu * t).exp() * (v[(i, k)] * v[(j, k)]);
        }
        acc
    }

    /// Σ_k |e^{−μ_k t} φ_k(i) φ_k(j)|, the conditioning scale of a kernel value.
    pub fn absolute_scale(&self, t: f64, i: usize, j: usize) -> f64 {
        let v = self.decomp.vectors();
        let r = self.active_modes(t);
        self.decomp.values()[..r].iter().enumerate().map(|(k, &mu)| ((-mu * t).exp() * (v[(i, k)] * v[(j, k)])).abs()).sum()
    }

    /// The full kernel matrix at time t, exactly symmetric.
    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        self.check_time(t)?;
        let r = self.active_modes(t);
        let v = self.decomp.vectors().columns(0, r);
        let mut w = v.clone_owned();
        for (k, &mu) in self.decomp.values()[..r].iter().enumerate() {
            w.column_mut(k).scale_mut((-mu * t / 2.0).exp());
        }
        let mut out = &w * w.transpose();
        let n = out.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                out[(j, i)] = out[(i, j)];
            }
        }
        Ok(out)
    }

    /// h·Σ_x k(t,x,x) = Σ_k e^{−μ_k t}.
    pub fn trace(&self, t: f64) -> f64 {
        self.decomp.values().iter().map(|&mu| if mu * t <= EXP_CUTOFF { (-mu * t).exp() } else { 0.0 }).sum()
    }
}

pub fn kernel_eval(ev: &HeatKernelEvaluator<'_>, t: f64, i: usize, j: usize) -> Result<KernelValue> {
    ev.eval(t, i, j)
}

/// A finite-difference derivative value; `one_sided` marks boundary stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeValue {
    pub value: f64,
    pub one_sided: bool,
}

/// ∂_x^order k(t, x_i, y_j) by a centered stencil.
pub fn kernel_derivative(ev: &HeatKernelEvaluator<'_>, order: usize, t: f64, i: usize, j: usize) -> Result<DerivativeValue> {
    let d = ev.decomposition();
    let m = d.m();
    if order > 0 && order >= m {
        return Err(Error::Domain(format!("derivative order {order} exceeds m−1 = {}", m - 1)));
    }
    ev.eval(t, i, j)?;
    let n = d.len();
    let column: Vec<f64> = (0..n).map(|x| ev.value(t, x, j)).collect();
    let (value, one_sided) = stencil_derivative(&column, d.grid().h(), order, i)?;
    Ok(DerivativeValue { value, one_sided })
}

/// e^{−Ht} f.
pub fn semigroup_apply(d: &SpectralDecomposition, t: f64, f: &DVector<f64>) -> Result<DVector<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("semigroup time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let mut c = d.coefficients(f);
    damp(d, t, c.as_mut_slice());
    Ok(d.synthesize(&c))
}

pub fn semigroup_apply_complex(d: &SpectralDecomposition, t: f64, f: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("semigroup time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let re = semigroup_apply(d, t, &f.map(|z| z.re))?;
    let im = semigroup_apply(d, t, &f.map(|z| z.im))?;
    Ok(re.zip_map(&im, Complex64::new))
}

fn damp(d: &SpectralDecomposition, t: f64, c: &mut [f64]) {
    for (ck, &mu) in c.iter_mut().zip(d.values()) {
        *ck = if mu * t <= EXP_CUTOFF { *ck * (-mu * t).exp() } else { 0.0 };
    }
}

/// One (t, sample) evaluation of the evolved-form bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvedFormRow {
    pub t: f64,
    pub sample: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct EvolvedFormReport {
    pub rows: Vec<EvolvedFormRow>,
    pub worst: EvolvedFormRow,
    pub violations: usize,
}

impl EvolvedFormReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn ensure(&self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let list: Vec<String> = self
            .rows
            .iter()
            .filter(|r| r.ratio > 1.0 + EVOLVED_SLACK)
            .take(10)
            .map(|r| format!("(t={:.6e}, sample={}, ratio={:.12})", r.t, r.sample, r.ratio))
            .collect();
        Err(Error::Property { check: "evolved_form_bound".into(), witness: list.join(", ") })
    }
}

const EVOLVED_SLACK: f64 = 1e-10;

/// Checks Q(e^{−Ht} f) ≤ g̃(t)‖f‖² for every (t, f).
pub fn evolved_form_bound_check(
    d: &SpectralDecomposition,
    t_grid: &[f64],
    samples: &[DVector<f64>],
) -> Result<EvolvedFormReport> {
    let s = d.spectral_gap()?;
    let g = GTildeFn::new(s)?;
    let h = d.grid().h();
    let coeffs: Vec<DVector<f64>> = samples.iter().map(|f| d.coefficients(f)).collect();
    let mut rows = Vec::with_capacity(t_grid.len() * samples.len());
    for &t in t_grid {
        let lg = g.ln_eval(t)?;
        for (k, c) in coeffs.iter().enumerate() {
            let norm2 = h * samples[k].norm_squared();
            if norm2 == 0.0 {
                return Err(Error::Domain(format!("sample {k} is zero")));
            }
            let mut acc = 0.0;
            for (ck, &mu) in c.iter().zip(d.values()) {
                let e = 2.0 * (mu - s) * t;
                if e <= 2.0 * EXP_CUTOFF {
                    acc += mu * (-e).exp() * ck * ck;
                }
            }
            let ratio = if acc > 0.0 { (acc.ln() - 2.0 * s * t - lg - norm2.ln()).exp() } else { 0.0 };
            rows.push(EvolvedFormRow { t, sample: k, ratio });
        }
    }
    let worst = *rows
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .ok_or_else(|| Error::Config("evolved-form check needs samples and times".into()))?;
    let violations = rows.iter().filter(|r| r.ratio > 1.0 + EVOLVED_SLACK).count();
    Ok(EvolvedFormReport { rows, worst, violations })
}
