use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sampling::rng_for;

/// Relative slack below which a margin counts as a violation.
pub const MARGIN_TOL: f64 = 1e-10;
const MAX_COUNTEREXAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// A closed parameter interval sampled linearly or logarithmically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl Range {
    pub fn linear(lo: f64, hi: f64) -> Result<Self> {
        Self::build(lo, hi, Scale::Linear)
    }

    pub fn log(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0) {
            return Err(Error::Parameter(format!("log range needs a positive lower end, got {lo}")));
        }
        Self::build(lo, hi, Scale::Log)
    }

    fn build(lo: f64, hi: f64, scale: Scale) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Parameter(format!("invalid range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, scale })
    }

    fn warp(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Linear => x,
            Scale::Log => x.ln(),
        }
    }

    fn unwarp(&self, u: f64) -> f64 {
        match self.scale {
            Scale::Linear => u,
            Scale::Log => u.exp(),
        }
    }

    fn width(&self) -> f64 {
        self.warp(self.hi) - self.warp(self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let u = rng.random_range(self.warp(self.lo)..=self.warp(self.hi));
        self.unwarp(u).clamp(self.lo, self.hi)
    }

    /// `count` evenly spaced points (in the range's scale), endpoints included.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        if count <= 1 || self.lo == self.hi {
            return vec![self.lo];
        }
        let (a, w) = (self.warp(self.lo), self.width());
        let mut out: Vec<f64> =
            (0..count).map(|k| self.unwarp(a + w * k as f64 / (count - 1) as f64).clamp(self.lo, self.hi)).collect();
        out[0] = self.lo;
        out[count - 1] = self.hi;
        out
    }

    /// A point near `x`, at most `fraction` of the width away, clamped to the range.
    pub fn perturb(&self, x: f64, fraction: f64, rng: &mut ChaCha8Rng) -> f64 {
        let w = self.width() * fraction;
        if w == 0.0 {
            return x.clamp(self.lo, self.hi);
        }
        let u = self.warp(x) + rng.random_range(-w..=w);
        self.unwarp(u).clamp(self.lo, self.hi)
    }
}

/// Named parameter ranges with sample counts and the seed for randomized refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub ranges: Vec<(String, Range)>,
    pub points: usize,
    pub refinements: usize,
    /// Half-width of the refinement box as a fraction of each range.
    pub refine_width: f64,
    pub seed: u64,
}

impl SearchGrid {
    pub fn new(ranges: Vec<(String, Range)>, points: usize, seed: u64) -> Self {
        Self { ranges, points, refinements: 1000, refine_width: 0.02, seed }
    }

    pub fn range(&self, name: &str) -> Result<Range> {
        self.ranges
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, r)| *r)
            .ok_or_else(|| Error::Config(format!("search grid has no range named {name}")))
    }

    pub fn rng(&self, tag: &str) -> ChaCha8Rng {
        rng_for(self.seed, tag)
    }

    /// Random points over all ranges, in the order the ranges are declared.
    pub fn random_points(&self, tag: &str) -> Vec<Vec<f64>> {
        let mut rng = self.rng(tag);
        (0..self.points).map(|_| self.ranges.iter().map(|(_, r)| r.sample(&mut rng)).collect()).collect()
    }

    /// Perturbations of `center` confined to the declared ranges.
    pub fn refinement_points(&self, tag: &str, center: &[f64]) -> Vec<Vec<f64>> {
        let mut rng = self.rng(&format!("{tag}/refine"));
        (0..self.refinements)
            .map(|_| self.ranges.iter().zip(center).map(|((_, r), &c)| r.perturb(c, self.refine_width, &mut rng)).collect())
            .collect()
    }
}

/// Outcome of a brute-force sweep; margins are relative slack (rhs − lhs)/rhs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub check: String,
    pub points: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub worst_at: String,
    pub counterexamples: Vec<String>,
}

impl SweepReport {
    pub fn new(check: &str) -> Self {
        Self {
            check: check.to_string(),
            points: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst_at: String::new(),
            counterexamples: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Records one evaluated point; `at` is only formatted when it is needed.
    pub fn record(&mut self, lhs: f64, rhs: f64, at: impl FnOnce() -> String) {
        let margin = relative_margin(lhs, rhs);
        self.record_margin(margin, at);
    }

    pub fn record_margin(&mut self, margin: f64, at: impl FnOnce() -> String) {
        self.points += 1;
        let bad = margin < -MARGIN_TOL || margin.is_nan();
        if margin < self.worst_margin || bad || (self.points == 1) {
            let w = at();
            if bad {
                self.violations += 1;
                if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
                    self.counterexamples.push(format!("{w} margin={margin:.6e}"));
                }
            }
            if margin < self.worst_margin || self.points == 1 {
                self.worst_margin = margin;
                self.worst_at = w;
            }
        }
    }

    pub fn merge(&mut self, other: SweepReport) {
        self.points += other.points;
        self.violations += other.violations;
        for c in other.counterexamples {
            if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
                self.counterexamples.push(c);
            }
        }
        if other.worst_margin < self.worst_margin {
            self.worst_margin = other.worst_margin;
            self.worst_at = other.worst_at;
        }
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: points={} violations={} worst_margin={:.6e} at [{}]",
            self.check, self.points, self.violations, self.worst_margin, self.worst_at
        )
    }
}

/// (rhs − lhs)/rhs, with 0 ≤ 0 counted as tight and lhs > 0 = rhs as a violation.
pub fn relative_margin(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        (rhs - lhs) / rhs
    } else if lhs <= 0.0 {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}
