//! Symmetric eigendecomposition, heat kernels by eigen-expansion and the
//! semigroup they generate.

mod decomposition;
mod jacobi;
mod kernel;
mod lanczos;
mod stencil;

pub use decomposition::{spectral_gap, SpectralDecomposition};
pub use jacobi::{eigh, SymmetricEigen, MAX_SWEEPS};
pub use kernel::{
    evolved_form_bound_check, kernel_derivative, kernel_eval, semigroup_apply, semigroup_apply_complex, DerivativeValue,
    EvolvedFormReport, EvolvedFormRow, HeatKernelEvaluator, KernelValue, EXP_CUTOFF,
};
pub use lanczos::top_eigenpair;
pub use stencil::stencil_derivative;
