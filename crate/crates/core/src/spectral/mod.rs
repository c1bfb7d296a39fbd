//! Dense verification of the conditioning theory for BDAL-preconditioned KKT
//! systems and the spectral-filter model of source inversion.

mod filter;
mod verify;

pub use filter::{
    cond_bound, damped_projector_constants_exact, error_decomposition, filter_constants, model_problem_sequences,
    psi_sigma_max, AmGmConstants, SpectralFilterModel,
};
pub use verify::{
    analyze_bounds, build_preconditioned_e, verify_bounds, ConditionReport, DENSE_VERIFICATION_LIMIT, THEORY_SLACK,
};
