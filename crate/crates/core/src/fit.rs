//! Fitted constants with validation statistics.

use std::fmt;

use crate::error::{Error, Result};

/// Relative change `|fine − coarse| / |coarse|`; zero when both vanish.
pub fn relative_drift(coarse: f64, fine: f64) -> f64 {
    if coarse == fine {
        0.0
    } else if coarse == 0.0 {
        f64::INFINITY
    } else {
        (fine - coarse).abs() / coarse.abs()
    }
}

/// Outcome of fitting constants on a training set and validating them.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub constants: Vec<(String, f64)>,
    /// Where the fitted constant is attained.
    pub worst: Option<String>,
    /// Relative change under mesh doubling, when measured.
    pub drift: Option<f64>,
    pub drift_budget: f64,
    pub training: usize,
    pub held_out: usize,
    pub violations: usize,
    pub violation_witness: Option<String>,
    /// Samples left out of the fit (below resolution or round-off).
    pub excluded: usize,
}

impl FitResult {
    pub fn new(constants: Vec<(String, f64)>, drift_budget: f64) -> Self {
        Self {
            constants,
            worst: None,
            drift: None,
            drift_budget,
            training: 0,
            held_out: 0,
            violations: 0,
            violation_witness: None,
            excluded: 0,
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.drift.is_none_or(|d| d <= self.drift_budget)
    }

    /// Attaches the drift between this fit and the same fit on a refined mesh.
    pub fn with_refined(mut self, fine: &FitResult) -> Self {
        let drift = self
            .constants
            .iter()
            .map(|(k, v)| fine.constant(k).map_or(f64::INFINITY, |w| relative_drift(*v, w)))
            .fold(0.0f64, f64::max);
        self.drift = Some(drift);
        self.violations += fine.violations;
        self.held_out += fine.held_out;
        if self.violation_witness.is_none() {
            self.violation_witness = fine.violation_witness.clone();
        }
        self
    }

    pub fn ensure(&self, check: &str) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Property { check: check.to_string(), witness: self.to_string() })
        }
    }
}

impl fmt::Display for FitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let consts: Vec<String> = self.constants.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        write!(f, "{}", consts.join(" "))?;
        if let Some(d) = self.drift {
            write!(f, " drift={d:.4}")?;
        }
        write!(f, " violations={}", self.violations)?;
        if let Some(w) = &self.violation_witness {
            write!(f, " witness=[{w}]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_definition() {
        assert_eq!(relative_drift(0.0, 0.0), 0.0);
        assert!((relative_drift(2.0, 2.2) - 0.1).abs() < 1e-12);
        assert!(relative_drift(0.0, 1.0).is_infinite());
    }

    #[test]
    fn refined_merge() {
        let a = FitResult::new(vec![("c".into(), 1.0), ("d".into(), 2.0)], 0.15);
        let b = FitResult::new(vec![("c".into(), 1.1), ("d".into(), 2.0)], 0.15);
        let m = a.with_refined(&b);
        assert!((m.drift.unwrap() - 0.1).abs() < 1e-12);
        assert!(m.passed());
    }
}
