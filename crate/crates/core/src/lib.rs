//! Heat kernels of higher-order Dirichlet elliptic operators on bounded
//! intervals: discretization, spectral evaluation, and numerical checks of
//! boundary-decaying Gaussian bounds, twisted semigroup estimates and the
//! supporting interpolation inequalities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod bounds;
pub mod domain;
pub mod error;
pub mod fit;
pub mod inequalities;
pub mod profiles;
pub mod sampling;
pub mod spectral;
pub mod twist;

pub use error::{Error, Result};
