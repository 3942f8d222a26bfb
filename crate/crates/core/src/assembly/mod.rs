//! Discretization of the quadratic form, ellipticity measurement and
//! fractional powers of the discrete Dirichlet Laplacian.

mod coefficients;
mod difference;
mod form;

pub use coefficients::{Coefficient, OperatorSpec};
pub use difference::{
    averaging, avg_vec, diff_vec, difference_matrix, forward_difference, level_positions, lifted_difference, DifferenceOperator,
    MAX_ORDER,
};
pub use form::{assemble_form, frac_power, measure_ellipticity, measure_ellipticity_with, Ellipticity, FormMatrix};
