use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A real coefficient function a_ij(x).
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Samples `(x, value)` sorted by `x`, linearly interpolated.
    Tabulated(Vec<(f64, f64)>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Function(_) => write!(f, "Function(..)"),
            Self::Tabulated(v) => write!(f, "Tabulated({} samples)", v.len()),
        }
    }
}

impl Coefficient {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Function(f) => f(x),
            Self::Tabulated(t) => interpolate(t, x),
        }
    }

    /// Scaled copy `c·a(x)`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Constant(a) => Self::Constant(c * a),
            Self::Function(f) => {
                let f = Arc::clone(f);
                Self::function(move |x| c * f(x))
            }
            Self::Tabulated(t) => Self::Tabulated(t.iter().map(|&(x, v)| (x, c * v)).collect()),
        }
    }
}

fn interpolate(t: &[(f64, f64)], x: f64) -> f64 {
    match t.iter().position(|&(xi, _)| xi >= x) {
        None => t.last().map_or(f64::NAN, |p| p.1),
        Some(0) => t[0].1,
        Some(k) => {
            let (x0, y0) = t[k - 1];
            let (x1, y1) = t[k];
            if x1 == x0 {
                y1
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Order parameter m and coefficient table defining Q.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    m: usize,
    coefficients: BTreeMap<(usize, usize), Coefficient>,
}

impl OperatorSpec {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > super::MAX_ORDER {
            return Err(Error::Unsupported(format!("order parameter m={m} outside 1..={}", super::MAX_ORDER)));
        }
        Ok(Self { m, coefficients: BTreeMap::new() })
    }

    /// The form of (−Δ)^m.
    pub fn polyharmonic(m: usize) -> Result<Self> {
        Ok(Self::new(m)?.with_coefficient(m, m, Coefficient::Constant(1.0)))
    }

    pub fn with_coefficient(mut self, i: usize, j: usize, c: Coefficient) -> Self {
        self.coefficients.insert((i, j), c);
        self
    }

    /// Sets both a_ij and a_ji.
    pub fn with_symmetric(self, i: usize, j: usize, c: Coefficient) -> Self {
        if i == j {
            self.with_coefficient(i, i, c)
        } else {
            self.with_coefficient(i, j, c.clone()).with_coefficient(j, i, c)
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coefficient(&self, i: usize, j: usize) -> Option<&Coefficient> {
        self.coefficients.get(&(i, j))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Coefficient)> {
        self.coefficients.iter()
    }

    /// Every coefficient multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { m: self.m, coefficients: self.coefficients.iter().map(|(k, v)| (*k, v.scaled(c))).collect() }
    }

    /// Reads a table with header `i,j,x,value`.
    pub fn from_csv_reader<R: Read>(m: usize, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expect = ["i", "j", "x", "value"];
        if headers.len() != 4 || headers.iter().zip(expect).any(|(a, b)| a != b) {
            return Err(Error::Config(format!("coefficient table header must be i,j,x,value, got {headers:?}")));
        }
        let mut table: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| rec.get(k).unwrap_or("").to_string();
            let bad = |what: &str| Error::Config(format!("coefficient table row {}: invalid {what}", line + 2));
            let i: usize = field(0).parse().map_err(|_| bad("i"))?;
            let j: usize = field(1).parse().map_err(|_| bad("j"))?;
            let x: f64 = field(2).parse().map_err(|_| bad("x"))?;
            let v: f64 = field(3).parse().map_err(|_| bad("value"))?;
            if !(x.is_finite() && v.is_finite()) {
                return Err(bad("non-finite sample"));
            }
            if i > m || j > m {
                return Err(Error::Config(format!("coefficient index ({i},{j}) exceeds m={m}")));
            }
            table.entry((i, j)).or_default().push((x, v));
        }
        if table.is_empty() {
            return Err(Error::Config("coefficient table has no samples".into()));
        }
        let mut spec = Self::new(m)?;
        for (k, mut samples) in table {
            samples.sort_by(|a, b| a.0.total_cmp(&b.0));
            spec.coefficients.insert(k, Coefficient::Tabulated(samples));
        }
        Ok(spec)
    }

    pub fn from_csv(m: usize, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Config(format!("cannot open coefficient table {}: {e}", path.display())))?;
        Self::from_csv_reader(m, file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolation() {
        let c = Coefficient::Tabulated(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert_eq!(c.eval(0.5), 2.0);
        assert_eq!(c.eval(-1.0), 1.0);
        assert_eq!(c.eval(2.0), 3.0);
    }

    #[test]
    fn csv_round_trip() {
        let text = "i,j,x,value\n1,1,0,1\n1,1,1,2\n0,0,0.5,0.1\n";
        let spec = OperatorSpec::from_csv_reader(1, text.as_bytes()).unwrap();
        assert_eq!(spec.coefficient(1, 1).unwrap().eval(0.5), 1.5);
        assert_eq!(spec.coefficient(0, 0).unwrap().eval(0.9), 0.1);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(matches!(OperatorSpec::from_csv_reader(1, "a,b\n1,2\n".as_bytes()), Err(Error::Config(_))));
        assert!(matches!(OperatorSpec::from_csv_reader(1, "i,j,x,value\n".as_bytes()), Err(Error::Config(_))));
        assert!(matches!(OperatorSpec::from_csv_reader(1, "i,j,x,value\n2,2,0,1\n".as_bytes()), Err(Error::Config(_))));
        assert!(OperatorSpec::new(4).is_err());
    }
}
