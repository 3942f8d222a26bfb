use super::fitting::{log_grid, FLOOR_MARGIN};
use crate::domain::GammaSchedule;
use crate::error::{Error, Result};
use crate::fit::{relative_drift, FitResult};
use crate::spectral::HeatKernelEvaluator;

/// Least-squares slope and intercept of ys against xs.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::Numerical("regression needs at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("regression abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub points: usize,
    pub excluded: usize,
}

impl SlopeFit {
    pub fn dominates(&self, schedule: &GammaSchedule) -> bool {
        self.slope >= schedule.gamma()
    }
}

/// Values below this are left out of log regressions.
pub const LOG_FLOOR: f64 = 1e-300;

/// Slope of log|k(t,x,y)| against log d_x over the tenth of the grid nearest one boundary.
pub fn boundary_slope(ev: &HeatKernelEvaluator<'_>, t: f64, y: usize, side: Side) -> Result<SlopeFit> {
    let d = ev.decomposition();
    let n = d.len();
    if !(t >= ev.floor()) {
        return Err(Error::Domain(format!("slope time {t:.3e} lies below the floor {:.3e}", ev.floor())));
    }
    if y >= n {
        return Err(Error::Domain(format!("index {y} out of range")));
    }
    let count = (n / 10).max(2);
    let grid = d.grid();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut excluded = 0;
    for k in 0..count {
        let i = match side {
            Side::Left => k,
            Side::Right => n - 1 - k,
        };
        let v = ev.value(t, i, y).abs();
        if v < LOG_FLOOR {
            excluded += 1;
            continue;
        }
        xs.push(grid.distance_at(i).ln());
        ys.push(v.ln());
    }
    let (slope, _) = least_squares(&xs, &ys)?;
    Ok(SlopeFit { slope, points: xs.len(), excluded })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub gap: f64,
    pub relative_error: f64,
}

impl RateFit {
    pub fn passed(&self) -> bool {
        self.relative_error <= 0.01
    }
}

/// The default long-time window [5/s, 20/s].
pub fn longtime_window(s: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| (5.0 + 15.0 * k as f64 / (count.max(2) - 1) as f64) / s).collect()
}

/// Slope of −log sup_{x,y}|k(t,x,y)| against t; the supremum sits on the diagonal.
pub fn longtime_rate(ev: &HeatKernelEvaluator<'_>, t_grid: &[f64]) -> Result<RateFit> {
    let d = ev.decomposition();
    let s = d.spectral_gap()?;
    let n = d.len();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("long-time grid must be positive, got {t}")));
        }
        let sup = (0..n).map(|i| ev.value(t, i, i)).fold(0.0f64, f64::max);
        if sup > LOG_FLOOR {
            xs.push(t);
            ys.push(-sup.ln());
        }
    }
    let (rate, _) = least_squares(&xs, &ys)?;
    Ok(RateFit { rate, gap: s, relative_error: (rate - s).abs() / s })
}

/// sup of t^{(N+2γ)/(2m)}|k(t,x,y)| / (d_x^γ d_y^γ) over [10·floor, 2/s] and position pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorStat {
    pub sup: f64,
    pub at: (f64, f64, f64),
    pub times: Vec<f64>,
}

pub fn smalltime_window(ev: &HeatKernelEvaluator<'_>, count: usize) -> Result<Vec<f64>> {
    let s = ev.decomposition().spectral_gap()?;
    let lo = FLOOR_MARGIN * ev.floor();
    let hi = 2.0 / s;
    if lo >= hi {
        return Err(Error::Config(format!("short-time window [{lo:.3e}, {hi:.3e}] is empty")));
    }
    Ok(log_grid(lo, hi, count))
}

pub fn smalltime_prefactor(
    ev: &HeatKernelEvaluator<'_>,
    schedule: &GammaSchedule,
    t_grid: &[f64],
    fractions: &[f64],
) -> Result<PrefactorStat> {
    let d = ev.decomposition();
    let s = d.spectral_gap()?;
    let lo = FLOOR_MARGIN * ev.floor();
    let hi = 2.0 / s;
    let times: Vec<f64> = t_grid.iter().copied().filter(|&t| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12)).collect();
    if times.is_empty() {
        return Err(Error::Config(format!("no sample time inside the window [{lo:.3e}, {hi:.3e}]")));
    }
    let grid = d.grid();
    let idx: Vec<usize> = fractions.iter().map(|f| grid.nearest_index(f * grid.length())).collect();
    let g = schedule.gamma();
    let a = schedule.time_exponent();
    let mut best = PrefactorStat { sup: 0.0, at: (0.0, 0.0, 0.0), times: times.clone() };
    for &t in &times {
        for (p, &i) in idx.iter().enumerate() {
            for &j in &idx[p..] {
                let v = t.powf(a) * ev.value(t, i, j).abs() / (grid.distance_at(i) * grid.distance_at(j)).powf(g);
                if v > best.sup {
                    best.sup = v;
                    best.at = (t, grid.point(i), grid.point(j));
                }
            }
        }
    }
    Ok(best)
}

/// The prefactor statistic on two meshes with its drift.
pub fn smalltime_prefactor_fit(
    coarse: &HeatKernelEvaluator<'_>,
    fine: &HeatKernelEvaluator<'_>,
    schedule: &GammaSchedule,
    t_grid: &[f64],
    fractions: &[f64],
) -> Result<FitResult> {
    let a = smalltime_prefactor(coarse, schedule, t_grid, fractions)?;
    let b = smalltime_prefactor(fine, schedule, t_grid, fractions)?;
    let mut fit = FitResult::new(vec![("sup".into(), a.sup)], 0.10);
    fit.worst = Some(format!("t={:.6e} x={:.6} y={:.6}", a.at.0, a.at.1, a.at.2));
    fit.training = a.times.len() * fractions.len() * (fractions.len() + 1) / 2;
    fit.drift = Some(relative_drift(a.sup, b.sup));
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_form, OperatorSpec};
    use crate::domain::Grid1D;
    use crate::spectral::SpectralDecomposition;

    fn decomp(m: usize, l: f64, n: usize) -> SpectralDecomposition {
        let g = Grid1D::new(l, n).unwrap();
        SpectralDecomposition::from_form(&assemble_form(&OperatorSpec::polyharmonic(m).unwrap(), &g).unwrap()).unwrap()
    }

    #[test]
    fn regression_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (a, b) = least_squares(&xs, &ys).unwrap();
        assert!((a - 2.5).abs() < 1e-14 && (b + 1.0).abs() < 1e-14);
        assert!(least_squares(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn laplace_slopes_and_rate() {
        let d = decomp(1, std::f64::consts::PI, 100);
        let ev = HeatKernelEvaluator::new(&d);
        let l = boundary_slope(&ev, 0.5, 50, Side::Left).unwrap();
        let r = boundary_slope(&ev, 0.5, 49, Side::Right).unwrap();
        assert!((l.slope - 1.0).abs() < 0.02, "{l:?}");
        assert!((l.slope - r.slope).abs() < 1e-8);
        let rate = longtime_rate(&ev, &longtime_window(d.spectral_gap().unwrap(), 8)).unwrap();
        assert!(rate.passed(), "{rate:?}");
    }

    #[test]
    fn beam_slope_is_quadratic() {
        let slopes: Vec<f64> = [100, 200]
            .iter()
            .map(|&n| {
                let d = decomp(2, 1.0, n);
                let l = boundary_slope(&HeatKernelEvaluator::new(&d), 0.05, n / 2, Side::Left).unwrap();
                assert!(l.dominates(&GammaSchedule::from_gamma(2, 1, 1.49).unwrap()), "{l:?}");
                l.slope
            })
            .collect();
        assert!(slopes[0] > 1.6 && slopes[1] > slopes[0] && slopes[1] < 2.0, "{slopes:?}");
    }

    #[test]
    fn prefactor_on_diagonal() {
        let d = decomp(1, std::f64::consts::PI, 100);
        let ev = HeatKernelEvaluator::new(&d);
        let sc = GammaSchedule::from_gamma(1, 1, 0.0).unwrap();
        let ts = smalltime_window(&ev, 10).unwrap();
        let p = smalltime_prefactor(&ev, &sc, &ts, &[0.5]).unwrap();
        let flat = (4.0 * std::f64::consts::PI).sqrt().recip();
        assert!(p.sup > 0.9 * flat && p.sup < 1.1 * flat, "{p:?}");
        assert!(matches!(smalltime_prefactor(&ev, &sc, &[100.0], &[0.5]), Err(Error::Config(_))));
    }

    #[test]
    fn rescaled_operator_doubles_rate() {
        let g = Grid1D::new(std::f64::consts::PI, 60).unwrap();
        let spec = OperatorSpec::polyharmonic(1).unwrap();
        let a = SpectralDecomposition::from_form(&assemble_form(&spec, &g).unwrap()).unwrap();
        let b = SpectralDecomposition::from_form(&assemble_form(&spec.scaled(2.0), &g).unwrap()).unwrap();
        let ra = longtime_rate(&HeatKernelEvaluator::new(&a), &longtime_window(a.spectral_gap().unwrap(), 6)).unwrap();
        let rb = longtime_rate(&HeatKernelEvaluator::new(&b), &longtime_window(b.spectral_gap().unwrap(), 6)).unwrap();
        assert!((rb.rate / ra.rate - 2.0).abs() < 1e-3);
    }
}
