//! Built-in reference operators.

use crate::assembly::{assemble_form, Coefficient, FormMatrix, OperatorSpec};
use crate::domain::Grid1D;
use crate::error::{Error, Result};

/// An operator on (0, L) known by name.
#[derive(Debug, Clone)]
pub struct Profile {
    pub name: &'static str,
    pub length: f64,
    pub spec: OperatorSpec,
}

pub const PROFILE_NAMES: [&str; 3] = ["laplace-pi", "beam-1", "beam-wavy"];

impl Profile {
    pub fn m(&self) -> usize {
        self.spec.m()
    }

    pub fn grid(&self, n: usize) -> Result<Grid1D> {
        Grid1D::new(self.length, n)
    }

    pub fn form(&self, n: usize) -> Result<FormMatrix> {
        assemble_form(&self.spec, &self.grid(n)?)
    }
}

/// `laplace-pi`: −Δ on (0, π). `beam-1`: the clamped beam Δ² on (0, 1).
/// `beam-wavy`: a fourth-order form with a_22 = 1 + ½ sin(2πx) and a_11 = 0.1 on (0, 1).
pub fn builtin(name: &str) -> Result<Profile> {
    match name {
        "laplace-pi" => Ok(Profile { name: "laplace-pi", length: std::f64::consts::PI, spec: OperatorSpec::polyharmonic(1)? }),
        "beam-1" => Ok(Profile { name: "beam-1", length: 1.0, spec: OperatorSpec::polyharmonic(2)? }),
        "beam-wavy" => Ok(Profile {
            name: "beam-wavy",
            length: 1.0,
            spec: OperatorSpec::new(2)?
                .with_coefficient(2, 2, Coefficient::function(|x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin()))
                .with_coefficient(1, 1, Coefficient::Constant(0.1)),
        }),
        other => Err(Error::Config(format!("unknown profile {other:?}; known: {}", PROFILE_NAMES.join(", ")))),
    }
}
