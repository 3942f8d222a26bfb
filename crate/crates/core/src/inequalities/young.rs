use rayon::prelude::*;

use super::search::{Range, SearchGrid, SweepReport};
use crate::error::{Error, Result};

/// Relative tolerance for equality at the analytic maximizer.
pub const TIGHTNESS_TOL: f64 = 1e-8;

/// c_{p,q} = (p/(p+q))^{p/q} − (p/(p+q))^{1+p/q}.
pub fn young_constant(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::Domain(format!("Young constant needs p, q > 0, got p={p}, q={q}")));
    }
    let r = p / (p + q);
    Ok(r.powf(p / q) * (q / (p + q)))
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// ln of both sides of a^p b^q ≤ ε a^{p+q} + c_{p,q} ε^{−p/q} b^{p+q}.
pub fn basic_sides_ln(a: f64, b: f64, p: f64, q: f64, eps: f64) -> Result<(f64, f64)> {
    if !(a >= 0.0 && b >= 0.0 && eps > 0.0) {
        return Err(Error::Domain(format!("need a, b ≥ 0 and ε > 0, got a={a}, b={b}, ε={eps}")));
    }
    let c = young_constant(p, q)?;
    let (la, lb) = (a.ln(), b.ln());
    let lhs = if a == 0.0 || b == 0.0 { f64::NEG_INFINITY } else { p * la + q * lb };
    let t1 = if a == 0.0 { f64::NEG_INFINITY } else { eps.ln() + (p + q) * la };
    let t2 = if b == 0.0 { f64::NEG_INFINITY } else { c.ln() - p / q * eps.ln() + (p + q) * lb };
    Ok((lhs, log_sum_exp(t1, t2)))
}

/// Relative slack 1 − lhs/rhs.
pub fn basic_margin(a: f64, b: f64, p: f64, q: f64, eps: f64) -> Result<f64> {
    let (l, r) = basic_sides_ln(a, b, p, q, eps)?;
    Ok(if r == f64::NEG_INFINITY { 0.0 } else { -(l - r).exp_m1() })
}

/// The maximizer of a ↦ a^p b^q − ε a^{p+q}.
pub fn basic_maximizer(b: f64, p: f64, q: f64, eps: f64) -> f64 {
    b * (p / (eps * (p + q))).powf(1.0 / q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicReport {
    pub sweep: SweepReport,
    pub tightness_error: f64,
    pub tightness_points: usize,
    pub tightness_worst: String,
}

impl BasicReport {
    pub fn passed(&self) -> bool {
        self.sweep.passed() && self.tightness_error <= TIGHTNESS_TOL
    }
}

pub fn basic_grid(points: usize, seed: u64) -> Result<SearchGrid> {
    Ok(SearchGrid::new(
        vec![
            ("a".into(), Range::log(1e-3, 1e3)?),
            ("b".into(), Range::log(1e-3, 1e3)?),
            ("p".into(), Range::log(0.05, 20.0)?),
            ("q".into(), Range::log(0.05, 20.0)?),
            ("eps".into(), Range::log(1e-3, 1e3)?),
        ],
        points,
        seed,
    ))
}

fn sweep_points(pts: &[Vec<f64>], check: &str) -> Result<SweepReport> {
    let parts: Vec<Result<SweepReport>> = pts
        .par_chunks(4096)
        .map(|chunk| {
            let mut r = SweepReport::new(check);
            for x in chunk {
                let m = basic_margin(x[0], x[1], x[2], x[3], x[4])?;
                r.record_margin(m, || format!("a={:.6e} b={:.6e} p={:.6e} q={:.6e} ε={:.6e}", x[0], x[1], x[2], x[3], x[4]));
            }
            Ok(r)
        })
        .collect();
    let mut out = SweepReport::new(check);
    for p in parts {
        out.merge(p?);
    }
    Ok(out)
}

/// Seeded sweep over (a, b, p, q, ε), refinement around the worst point, and
/// equality at the analytic maximizer for every sampled (p, q, ε, b).
pub fn check_basic(grid: &SearchGrid) -> Result<BasicReport> {
    let names = ["a", "b", "p", "q", "eps"];
    let ranges: Vec<Range> = names.iter().map(|n| grid.range(n)).collect::<Result<_>>()?;
    let ordered = SearchGrid { ranges: names.iter().zip(&ranges).map(|(n, r)| (n.to_string(), *r)).collect(), ..grid.clone() };
    let pts = ordered.random_points("basic");
    let mut sweep = sweep_points(&pts, "basic")?;
    let worst = pts
        .iter()
        .map(|x| (basic_margin(x[0], x[1], x[2], x[3], x[4]).unwrap_or(f64::NEG_INFINITY), x))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, x)| x.clone());
    if let Some(w) = worst {
        sweep.merge(sweep_points(&ordered.refinement_points("basic", &w), "basic")?);
    }
    let (mut err, mut at) = (0.0f64, String::new());
    for x in &pts {
        let (b, p, q, e) = (x[1], x[2], x[3], x[4]);
        let a = basic_maximizer(b, p, q, e);
        let (l, r) = basic_sides_ln(a, b, p, q, e)?;
        let rel = (l - r).exp_m1().abs();
        if rel > err {
            err = rel;
            at = format!("a*={a:.6e} b={b:.6e} p={p:.6e} q={q:.6e} ε={e:.6e}");
        }
    }
    Ok(BasicReport { sweep, tightness_error: err, tightness_points: pts.len(), tightness_worst: at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_constants() {
        assert!((young_constant(1.0, 1.0).unwrap() - 0.25).abs() < 1e-16);
        assert!((young_constant(2.0, 1.0).unwrap() - 4.0 / 27.0).abs() < 1e-16);
        assert!(young_constant(0.0, 1.0).is_err());
        assert!(young_constant(1.0, -1.0).is_err());
    }

    #[test]
    fn small_exponent_limits() {
        assert!(young_constant(1.0, 1e-4).unwrap() < 1e-3);
        assert!((young_constant(1e-4, 1.0).unwrap() - 0.99898).abs() < 1e-5);
    }

    #[test]
    fn hand_worked_points() {
        assert_eq!(basic_margin(3.0, 0.0, 1.0, 1.0, 0.5).unwrap(), 1.0);
        assert!(basic_margin(1.0, 1.0, 1.0, 1.0, 0.5).unwrap().abs() < 1e-15);
        assert_eq!(basic_maximizer(1.0, 1.0, 1.0, 0.5), 1.0);
    }

    #[test]
    fn small_sweep_is_clean_and_tight() {
        let r = check_basic(&basic_grid(2000, 3).unwrap()).unwrap();
        assert!(r.passed(), "{} tight={:e}", r.sweep, r.tightness_error);
        assert_eq!(r.sweep.points, 3000);
        assert!(r.sweep.worst_margin >= 0.0 && r.sweep.worst_margin < 0.05);
        let again = check_basic(&basic_grid(2000, 3).unwrap()).unwrap();
        assert_eq!(r, again);
    }

    proptest! {
        #[test]
        fn constant_in_unit_interval(p in 1e-3f64..1e3, q in 1e-3f64..1e3) {
            let c = young_constant(p, q).unwrap();
            prop_assert!(c > 0.0 && c < 1.0);
        }

        #[test]
        fn maximizer_is_tight(b in 1e-2f64..1e2, p in 0.1f64..10.0, q in 0.1f64..10.0, e in 1e-2f64..1e2) {
            let a = basic_maximizer(b, p, q, e);
            prop_assert!(basic_margin(a, b, p, q, e).unwrap().abs() < TIGHTNESS_TOL);
            prop_assert!(basic_margin(a * 1.01, b, p, q, e).unwrap() > 0.0);
        }
    }
}
