//! Exponential twists e^{−λψ} H e^{λψ}: conjugated operators and forms, the
//! perturbation per(λ), numerical-range sectors and twisted semigroup norms.

mod identities;
mod leibniz;
mod modes;
mod norms;
mod operator;
mod sector;

pub use identities::{appendix_b_identities, probe_points, IdentityReport, RESOLVENT_TOL, SPECTRUM_TOL};
pub use leibniz::{
    form_perturbation_bound_fit, leibniz_expand, per_lambda, twisted_form_value, PerLambda, PerturbationGrid, PER_LAMBDA_TOL,
};
pub use modes::numerical_radius;
pub use norms::{
    evolved_twisted_form_check, operator_norm, twist_scale, twisted_function, twisted_kernel, twisted_propagator,
    twisted_semigroup_norm_fit, EvolvedTwistReport, EvolvedTwistRow, NormRow, SemigroupNormFit, TWISTED_KERNEL_TOL,
};
pub use operator::{conjugate, TwistSpec, TwistedOperator, TWIST_CAP};
pub use sector::{
    numerical_range_sector, sector_shift, sector_shift_auto, sector_shift_search, sector_values, SectorReport, SectorShift,
    AUTO_BRACKETS, BISECTION_STEPS,
};
