//! Discrete KKT system of Poisson source inversion, BDAL preconditioners and
//! the reduced-Hessian baseline.

mod kkt;
mod operators;
mod precond;
mod reduced;

pub use kkt::{reference_solution, KktSystem, DENSE_REFERENCE_LIMIT};
pub use operators::{exact_solver, ProblemOperators, EXACT_SOLVE_TOL};
pub use precond::{
    bdal_apply_inverse, Preconditioner, PreconditionerKind, PreconditionerSettings, DEFAULT_INEXACT_TOL,
};
pub use reduced::{reduced_hessian_apply, ReducedHessianOperator, RegularizationPreconditioner};
