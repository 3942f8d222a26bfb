use crate::error::{Error, Result};

/// Derivative of order ≤ 2 of grid values at interior index `i`.
///
/// Centered stencils use interior neighbours only; at the first and last
/// interior point a one-sided stencil of the same order is used and flagged.
pub fn stencil_derivative(values: &[f64], h: f64, order: usize, i: usize) -> Result<(f64, bool)> {
    let n = values.len();
    if i >= n {
        return Err(Error::Domain(format!("stencil index {i} out of range (n={n})")));
    }
    match order {
        0 => Ok((values[i], false)),
        1 | 2 if n < 3 => Err(Error::Domain("derivative stencils need at least 3 points".into())),
        1 => Ok(if i == 0 {
            ((values[1] - values[0]) / h, true)
        } else if i == n - 1 {
            ((values[n - 1] - values[n - 2]) / h, true)
        } else {
            ((values[i + 1] - values[i - 1]) / (2.0 * h), false)
        }),
        2 => {
            let c = i.clamp(1, n - 2);
            let v = (values[c - 1] - 2.0 * values[c] + values[c + 1]) / (h * h);
            Ok((v, c != i))
        }
        _ => Err(Error::Unsupported(format!("derivative order {order} is not supported"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        let h = 0.1;
        let v: Vec<f64> = (0..10)
            .map(|k| {
                let x = k as f64 * h;
                x * x
            })
            .collect();
        let (d1, flag) = stencil_derivative(&v, h, 1, 5).unwrap();
        assert!((d1 - 1.0).abs() < 1e-12 && !flag);
        let (d2, _) = stencil_derivative(&v, h, 2, 5).unwrap();
        assert!((d2 - 2.0).abs() < 1e-10);
        let (_, flag) = stencil_derivative(&v, h, 2, 0).unwrap();
        assert!(flag);
        assert!(stencil_derivative(&v, h, 3, 5).is_err());
    }
}
