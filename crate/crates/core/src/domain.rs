//! Grid, multi-indices, the γ/ε schedule and the reference function g̃.

use crate::error::{Error, Result};

/// Uniform grid of `n` interior points on (0, L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!("domain length must be positive, got {length}")));
        }
        if n == 0 {
            return Err(Error::Domain("grid needs at least one interior point".into()));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_interior(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n + 1) as f64
    }

    /// Coordinate of interior point `i` (0-based), i.e. `(i+1)·h`.
    pub fn point(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the interior point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = (x / self.h()).round() as i64 - 1;
        k.clamp(0, self.n as i64 - 1) as usize
    }

    /// Grid with twice as many interior points.
    pub fn refined(&self) -> Self {
        Self { length: self.length, n: 2 * self.n }
    }

    /// Shortest time the mesh resolves for an operator of order 2m.
    pub fn time_floor(&self, m: usize) -> f64 {
        self.h().powi(2 * m as i32)
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    pub fn distance(&self, x: f64) -> Result<f64> {
        boundary_distance(self, x)
    }

    /// Boundary distance of interior point `i`.
    pub fn distance_at(&self, i: usize) -> f64 {
        (i + 1).min(self.n - i) as f64 * self.h()
    }
}

pub fn boundary_distance(grid: &Grid1D, x: f64) -> Result<f64> {
    let l = grid.length();
    if !(0.0..=l).contains(&x) {
        return Err(Error::Domain(format!("point {x} lies outside [0, {l}]")));
    }
    Ok(x.min(l - x))
}

/// Non-negative multi-index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        Self(components)
    }

    pub fn scalar(k: u32) -> Self {
        Self(vec![k])
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dominates(&self, r: &MultiIndex) -> bool {
        self.dim() == r.dim() && self.0.iter().zip(&r.0).all(|(a, b)| b <= a)
    }

    /// Componentwise difference `self − r`.
    pub fn minus(&self, r: &MultiIndex) -> Result<MultiIndex> {
        if !self.dominates(r) {
            return Err(Error::Domain(format!("{r:?} is not dominated by {self:?}")));
        }
        Ok(Self(self.0.iter().zip(&r.0).map(|(a, b)| a - b).collect()))
    }

    /// All `r ≤ self` in lexicographic order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.dim())];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=a).map(move |k| {
                        let mut v = prefix.clone();
                        v.push(k);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(MultiIndex).collect()
    }

    pub fn vector_binomial(&self, r: &MultiIndex) -> Result<u64> {
        if !self.dominates(r) {
            return Err(Error::Domain(format!("{r:?} is not dominated by {self:?}")));
        }
        Ok(self.0.iter().zip(&r.0).map(|(&a, &b)| binomial(a, b)).product())
    }
}

pub fn lower_set(alpha: &MultiIndex) -> Vec<MultiIndex> {
    alpha.lower_set()
}

pub fn vector_binomial(alpha: &MultiIndex, r: &MultiIndex) -> Result<u64> {
    alpha.vector_binomial(r)
}

pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// The γ/ε bookkeeping for an operator of order 2m in dimension N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSchedule {
    m: usize,
    dim: usize,
    epsilon: f64,
    gamma: f64,
    int_part: usize,
    frac_part: f64,
}

impl GammaSchedule {
    pub fn from_epsilon(m: usize, dim: usize, epsilon: f64) -> Result<Self> {
        if 2 * m <= dim {
            return Err(Error::Parameter(format!("need 2m > N, got m={m}, N={dim}")));
        }
        let hi = 1.0 - dim as f64 / (2 * m) as f64;
        if !(epsilon > 0.0 && epsilon <= hi * (1.0 + 1e-15)) {
            return Err(Error::Parameter(format!("epsilon {epsilon} outside the admissible interval (0, {hi}]")));
        }
        let mut gamma = m as f64 * (1.0 - epsilon) - dim as f64 / 2.0;
        if (gamma - gamma.round()).abs() < 1e-12 {
            gamma = gamma.round();
        }
        let gamma = gamma.max(0.0);
        Ok(Self::split(m, dim, epsilon, gamma))
    }

    pub fn from_gamma(m: usize, dim: usize, gamma: f64) -> Result<Self> {
        if 2 * m <= dim {
            return Err(Error::Parameter(format!("need 2m > N, got m={m}, N={dim}")));
        }
        let hi = m as f64 - dim as f64 / 2.0;
        if !(gamma >= 0.0 && gamma < hi) {
            return Err(Error::Parameter(format!("gamma {gamma} outside the admissible interval [0, {hi})")));
        }
        let epsilon = 1.0 - (dim as f64 + 2.0 * gamma) / (2 * m) as f64;
        Ok(Self::split(m, dim, epsilon, gamma))
    }

    fn split(m: usize, dim: usize, epsilon: f64, gamma: f64) -> Self {
        let int_part = gamma.floor() as usize;
        Self { m, dim, epsilon, gamma, int_part, frac_part: gamma - int_part as f64 }
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// Integer part n of γ.
    pub fn int_part(&self) -> usize {
        self.int_part
    }
    /// Fractional part κ of γ.
    pub fn frac_part(&self) -> f64 {
        self.frac_part
    }

    /// ε recomputed from γ.
    pub fn epsilon_from_gamma(&self) -> f64 {
        1.0 - (self.dim as f64 + 2.0 * self.gamma) / (2 * self.m) as f64
    }

    /// Short-time exponent (N+2γ)/(2m).
    pub fn time_exponent(&self) -> f64 {
        (self.dim as f64 + 2.0 * self.gamma) / (2 * self.m) as f64
    }
}

pub fn gamma_from_epsilon(m: usize, dim: usize, epsilon: f64) -> Result<GammaSchedule> {
    GammaSchedule::from_epsilon(m, dim, epsilon)
}

/// The piecewise majorant of `sup_{μ ≥ s} μ e^{−2μt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GTildeFn {
    s: f64,
}

impl GTildeFn {
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Domain(format!("spectral gap must be positive, got {s}")));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.ln_eval(t)?.exp())
    }

    /// Natural logarithm of g̃(t); avoids underflow at large t.
    pub fn ln_eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("g̃ needs t > 0, got {t}")));
        }
        let s = self.s;
        Ok(if t > 1.0 / s { s.ln() - 2.0 * s * t } else { -t.ln() - s * t - 1.0 })
    }
}

pub fn gtilde(f: &GTildeFn, t: f64) -> Result<f64> {
    f.eval(t)
}
