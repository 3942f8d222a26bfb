//! Gaussian envelopes with boundary decay, their fitted constants and the
//! decay-rate extractors.

mod envelope;
mod fitting;
mod rates;
mod sobolev;

pub use envelope::{
    envelope_eval, long_time_envelope, optimal_lambda, optimized_exponent, optimized_gaussian_constant, short_time_envelope,
    twisted_envelope, BoundEnvelope, EnvelopeVariant, LambdaChoice,
};
pub use fitting::{
    fit_envelope_constants, log_grid, EnvelopeFit, EnvelopeGrid, ENVELOPE_DRIFT_BUDGET, FLOOR_MARGIN, NOISE_FLOOR,
};
pub use rates::{
    boundary_slope, least_squares, longtime_rate, longtime_window, smalltime_prefactor, smalltime_prefactor_fit,
    smalltime_window, PrefactorStat, RateFit, Side, SlopeFit, LOG_FLOOR,
};
pub use sobolev::{default_shifts, extremal_family, sobolev_pointwise_check, sobolev_ratio, SOBOLEV_DRIFT_BUDGET};
