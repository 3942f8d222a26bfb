//! Brute-force and spectral-calculus sweeps of the auxiliary polynomial and
//! operator inequalities, and of the g̃ majorant.

mod gtilde;
mod search;
mod spectral;
mod stephen;
mod young;

pub use gtilde::{gtilde_grid, gtilde_majorant};
pub use search::{relative_margin, Range, Scale, SearchGrid, SweepReport, MARGIN_TOL};
pub use spectral::{
    bond_pairs, check_bond, check_epsilon, check_main, check_main_difference, epsilon_scalar, laplacian_samples, main_scalar,
    PowerGrid, WeightedSample, DIFFERENCE_SLACK,
};
pub use stephen::{check_stephen, pencil_extremal, stephen_samples, StephenGrid, StephenReport, STEPHEN_DRIFT_BUDGET};
pub use young::{
    basic_grid, basic_margin, basic_maximizer, basic_sides_ln, check_basic, young_constant, BasicReport, TIGHTNESS_TOL,
};
