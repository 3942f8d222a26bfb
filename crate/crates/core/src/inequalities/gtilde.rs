use super::search::{Range, SearchGrid, SweepReport};
use crate::domain::GTildeFn;
use crate::error::Result;

/// μ ∈ s·[1, 10⁴], t ∈ [10⁻⁴, 10²]/s, as multiples of s and 1/s.
pub fn gtilde_grid(points: usize, seed: u64) -> Result<SearchGrid> {
    Ok(SearchGrid::new(vec![("mu/s".into(), Range::log(1.0, 1e4)?), ("t*s".into(), Range::log(1e-4, 1e2)?)], points, seed))
}

fn margin(g: &GTildeFn, mu: f64, t: f64) -> Result<f64> {
    let lhs = mu.ln() - 2.0 * mu * t;
    Ok(-(lhs - g.ln_eval(t)?).exp_m1())
}

/// μ e^{−2μt} ≤ g̃(t) on a tensor grid of about `grid.points` nodes, then random
/// refinement around the tightest node.
pub fn gtilde_majorant(s: f64, grid: &SearchGrid) -> Result<SweepReport> {
    let g = GTildeFn::new(s)?;
    let (rm, rt) = (grid.range("mu/s")?, grid.range("t*s")?);
    let per_axis = (grid.points as f64).sqrt().ceil() as usize;
    let mut rep = SweepReport::new("gtilde");
    let mut worst = (f64::INFINITY, [rm.lo, rt.lo]);
    for &a in &rm.grid(per_axis) {
        for &b in &rt.grid(per_axis) {
            let (mu, t) = (a * s, b / s);
            let m = margin(&g, mu, t)?;
            if m < worst.0 {
                worst = (m, [a, b]);
            }
            rep.record_margin(m, || format!("μ={mu:.6e} t={t:.6e} s·t={b:.6e} μ/s={a:.6e}"));
        }
    }
    let ordered = SearchGrid { ranges: vec![("mu/s".into(), rm), ("t*s".into(), rt)], ..grid.clone() };
    for x in ordered.refinement_points("gtilde", &worst.1) {
        let (mu, t) = (x[0] * s, x[1] / s);
        let m = margin(&g, mu, t)?;
        rep.record_margin(m, || format!("μ={mu:.6e} t={t:.6e} s·t={:.6e} μ/s={:.6e}", x[1], x[0]));
    }
    Ok(rep)
}
