use nalgebra::{DMatrix, DVector};

use super::coefficients::{Coefficient, OperatorSpec};
use super::difference::{level_positions, lifted_difference};
use crate::domain::Grid1D;
use crate::error::{Error, Result};
use crate::spectral::{eigh, SpectralDecomposition};

/// Symmetric matrix of the discrete quadratic form, `Q(f) = fᵀ Q_h f`.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    matrix: DMatrix<f64>,
    grid: Grid1D,
    m: usize,
    spec: Option<OperatorSpec>,
}

impl FormMatrix {
    pub fn new(matrix: DMatrix<f64>, grid: Grid1D, m: usize) -> Result<Self> {
        let n = grid.n_interior();
        if matrix.shape() != (n, n) {
            return Err(Error::Contract(format!("form matrix shape {:?} does not match n={n}", matrix.shape())));
        }
        Ok(Self { matrix, grid, m, spec: None })
    }

    /// Coefficient table the matrix was assembled from, if known.
    pub fn spec(&self) -> Option<&OperatorSpec> {
        self.spec.as_ref()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The operator `H_h = Q_h / h` acting in the h-weighted geometry.
    pub fn operator(&self) -> DMatrix<f64> {
        &self.matrix / self.grid.h()
    }

    pub fn quadratic(&self, f: &DVector<f64>) -> f64 {
        f.dot(&(&self.matrix * f))
    }

    pub fn rayleigh(&self, f: &DVector<f64>) -> f64 {
        self.quadratic(f) / (self.grid.h() * f.norm_squared())
    }

    /// Relative asymmetry `‖Q − Qᵀ‖_F / ‖Q‖_F`.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).norm() / self.matrix.norm().max(f64::MIN_POSITIVE)
    }
}

pub fn assemble_form(spec: &OperatorSpec, grid: &Grid1D) -> Result<FormMatrix> {
    let m = spec.m();
    let n = grid.n_interior();
    let h = grid.h();
    let l = grid.length();
    let mut any = false;
    for (&(i, j), c) in spec.entries() {
        if i > m || j > m {
            return Err(Error::Config(format!("coefficient ({i},{j}) exceeds m={m}")));
        }
        if spec.coefficient(j, i).is_none() {
            return Err(Error::Unsupported(format!(
                "coefficient ({i},{j}) has no ({j},{i}) partner; only Hermitian tables are supported"
            )));
        }
        if let Coefficient::Tabulated(t) = c {
            let covered = match (t.first(), t.last()) {
                (Some(a), Some(b)) => a.0 <= 1e-9 * l && b.0 >= l * (1.0 - 1e-9),
                _ => false,
            };
            if !covered {
                return Err(Error::Config(format!("coefficient ({i},{j}) samples do not cover [0, {l}]")));
            }
        }
        any = true;
    }
    if !any {
        return Err(Error::Config("operator has no coefficients".into()));
    }

    let mut q = DMatrix::<f64>::zeros(n, n);
    for (&(i, j), c) in spec.entries().filter(|((i, j), _)| i <= j) {
        let top = j;
        let positions = level_positions(grid, top);
        let partner = spec.coefficient(j, i).expect("checked above");
        let mut w = Vec::with_capacity(positions.len());
        for &x in &positions {
            let xc = x.clamp(0.0, l);
            let a = c.eval(xc);
            let b = partner.eval(xc);
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Config(format!("coefficient ({i},{j}) is not finite at x={xc}")));
            }
            if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::Unsupported(format!(
                    "a_{i}{j} and a_{j}{i} differ at x={xc}; only Hermitian tables are supported"
                )));
            }
            w.push(a);
        }
        let li = lifted_difference(grid, i, top)? / h.powi(i as i32);
        let mut lj = lifted_difference(grid, j, top)? / h.powi(j as i32);
        for (e, we) in w.iter().enumerate() {
            lj.row_mut(e).scale_mut(*we);
        }
        let term = li.transpose() * lj * h;
        if i == j {
            q += term;
        } else {
            q += &term + term.transpose();
        }
    }
    let mut form = FormMatrix::new(q, *grid, m)?;
    form.spec = Some(spec.clone());
    Ok(form)
}

/// Extremes of the pencil `Q f = λ P f` against the polyharmonic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipticity {
    pub c: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn measure_ellipticity(q: &FormMatrix, grid: &Grid1D, m: usize) -> Result<Ellipticity> {
    if q.grid() != grid || q.m() != m {
        return Err(Error::Contract("form matrix does not belong to the given grid and order".into()));
    }
    let p = assemble_form(&OperatorSpec::polyharmonic(m)?, grid)?;
    let pd = SpectralDecomposition::from_form(&p)?;
    measure_ellipticity_with(q, &pd)
}

/// Same as [`measure_ellipticity`] with a precomputed polyharmonic decomposition.
pub fn measure_ellipticity_with(q: &FormMatrix, poly: &SpectralDecomposition) -> Result<Ellipticity> {
    if poly.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::Positivity("polyharmonic form is not positive definite".into()));
    }
    let u = poly.euclidean_vectors();
    let mut inner = u.transpose() * q.operator() * &u;
    let scale: Vec<f64> = poly.values().iter().map(|v| v.sqrt().recip()).collect();
    for j in 0..inner.ncols() {
        for i in 0..inner.nrows() {
            inner[(i, j)] *= scale[i] * scale[j];
        }
    }
    let sym = (&inner + inner.transpose()) * 0.5;
    let e = eigh(&sym)?;
    let lambda_min = e.values[0];
    let lambda_max = *e.values.last().expect("non-empty");
    if lambda_min <= 0.0 {
        return Err(Error::Ellipticity(format!("pencil has non-positive extreme {lambda_min:.6e}")));
    }
    Ok(Ellipticity { c: lambda_max.max(1.0 / lambda_min), lambda_min, lambda_max })
}

/// `V diag(μ^p) Vᵀ h`: the p-th power of the decomposed operator.
pub fn frac_power(decomp: &SpectralDecomposition, p: f64) -> Result<DMatrix<f64>> {
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("fractional power needs p ≥ 0, got {p}")));
    }
    if p == 0.0 {
        let n = decomp.len();
        return Ok(DMatrix::identity(n, n));
    }
    let u = decomp.euclidean_vectors();
    let mut scaled = u.clone();
    for (k, &mu) in decomp.values().iter().enumerate() {
        scaled.column_mut(k).scale_mut(mu.powf(p));
    }
    let mut out = scaled * u.transpose();
    let n = out.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Coefficient;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian(n: usize, l: f64) -> (Grid1D, FormMatrix) {
        let g = Grid1D::new(l, n).unwrap();
        let q = assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap();
        (g, q)
    }

    #[test]
    fn two_point_laplacian() {
        let (_, q) = laplacian(2, 3.0);
        assert_eq!(q.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
    }

    #[test]
    fn coefficient_linearity() {
        let g = Grid1D::new(1.0, 7).unwrap();
        let one = assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap();
        let two = assemble_form(&OperatorSpec::new(1).unwrap().with_coefficient(1, 1, Coefficient::Constant(2.0)), &g).unwrap();
        assert_eq!(two.matrix(), &(one.matrix() * 2.0));
    }

    #[test]
    fn non_hermitian_tables_are_rejected() {
        let g = Grid1D::new(1.0, 5).unwrap();
        let spec = OperatorSpec::polyharmonic(1).unwrap().with_coefficient(0, 1, Coefficient::Constant(1.0));
        assert!(matches!(assemble_form(&spec, &g), Err(Error::Unsupported(_))));
        let spec = OperatorSpec::polyharmonic(1).unwrap().with_coefficient(0, 1, Coefficient::Constant(1.0)).with_coefficient(
            1,
            0,
            Coefficient::Constant(2.0),
        );
        assert!(matches!(assemble_form(&spec, &g), Err(Error::Unsupported(_))));
        let spec = OperatorSpec::new(1).unwrap().with_coefficient(1, 1, Coefficient::Tabulated(vec![(0.2, 1.0)]));
        assert!(matches!(assemble_form(&spec, &g), Err(Error::Config(_))));
    }

    #[test]
    fn mixed_orders_stay_symmetric() {
        let g = Grid1D::new(2.0, 30).unwrap();
        let spec = OperatorSpec::polyharmonic(2)
            .unwrap()
            .with_symmetric(1, 2, Coefficient::function(|x| 0.1 * x))
            .with_symmetric(0, 1, Coefficient::Constant(0.05))
            .with_coefficient(0, 0, Coefficient::Constant(1.0));
        let q = assemble_form(&spec, &g).unwrap();
        assert!(q.asymmetry() <= 1e-12);
        let t = q.matrix() - q.matrix().transpose();
        assert_eq!(t.abs().max(), 0.0);
    }

    #[test]
    fn sine_rayleigh_converges_quadratically() {
        let l = std::f64::consts::PI;
        let err = |n: usize| {
            let (g, q) = laplacian(n, l);
            let f = DVector::from_iterator(n, g.points().into_iter().map(|x| (std::f64::consts::PI * x / l).sin()));
            (q.rayleigh(&f) - 1.0).abs()
        };
        let (e1, e2) = (err(50), err(100));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn ellipticity_of_simple_operators() {
        let g = Grid1D::new(1.0, 40).unwrap();
        let p = assemble_form(&OperatorSpec::polyharmonic(1).unwrap(), &g).unwrap();
        let e = measure_ellipticity(&p, &g, 1).unwrap();
        assert!((e.c - 1.0).abs() < 1e-9);
        let q = assemble_form(&OperatorSpec::polyharmonic(1).unwrap().scaled(2.0), &g).unwrap();
        let e = measure_ellipticity(&q, &g, 1).unwrap();
        assert!((e.c - 2.0).abs() < 1e-9);
        let neg = FormMatrix::new(-p.matrix().clone(), g, 1).unwrap();
        assert!(matches!(measure_ellipticity(&neg, &g, 1), Err(Error::Ellipticity(_))));
    }

    #[test]
    fn ellipticity_sandwich_on_random_vectors() {
        let g = Grid1D::new(1.0, 40).unwrap();
        let spec = OperatorSpec::new(2)
            .unwrap()
            .with_coefficient(2, 2, Coefficient::function(|x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin()))
            .with_coefficient(1, 1, Coefficient::Constant(0.1));
        let q = assemble_form(&spec, &g).unwrap();
        let p = assemble_form(&OperatorSpec::polyharmonic(2).unwrap(), &g).unwrap();
        let e = measure_ellipticity(&q, &g, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let f = DVector::from_fn(40, |_, _| rng.random_range(-1.0..1.0));
            let (qf, pf) = (q.quadratic(&f), p.quadratic(&f));
            assert!(qf <= e.c * pf * (1.0 + 1e-10));
            assert!(qf >= pf / e.c * (1.0 - 1e-10));
        }
    }

    #[test]
    fn fractional_powers() {
        let (g, q) = laplacian(30, 1.0);
        let d = SpectralDecomposition::from_form(&q).unwrap();
        let lap = q.operator();
        let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm();
        assert!(rel(&frac_power(&d, 1.0).unwrap(), &lap) < 1e-10);
        assert_eq!(frac_power(&d, 0.0).unwrap(), DMatrix::identity(30, 30));
        let half = frac_power(&d, 0.5).unwrap();
        assert!(rel(&(&half * &half), &lap) < 1e-10);
        assert!(matches!(frac_power(&d, -1.0), Err(Error::Domain(_))));
        assert_eq!(g.n_interior(), 30);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fractional_powers_compose(p in 0.0f64..2.0, q in 0.0f64..2.0) {
            let (_, form) = laplacian(20, 2.0);
            let d = SpectralDecomposition::from_form(&form).unwrap();
            let a = frac_power(&d, p).unwrap() * frac_power(&d, q).unwrap();
            let b = frac_power(&d, p + q).unwrap();
            prop_assert!((&a - &b).norm() <= 1e-9 * b.norm());
        }

        #[test]
        fn assembled_forms_are_symmetric(c0 in 0.0f64..2.0, c1 in 0.1f64..2.0, w in -1.0f64..1.0, n in 3usize..40) {
            let g = Grid1D::new(1.5, n).unwrap();
            let spec = OperatorSpec::new(2).unwrap()
                .with_coefficient(2, 2, Coefficient::function(move |x| c1 + 0.5 * (w * x).sin().abs()))
                .with_symmetric(0, 2, Coefficient::Constant(0.01 * w))
                .with_coefficient(0, 0, Coefficient::Constant(c0));
            let q = assemble_form(&spec, &g).unwrap();
            prop_assert!(q.asymmetry() <= 1e-12);
        }
    }
}
