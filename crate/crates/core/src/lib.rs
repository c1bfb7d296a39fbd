//! Block-diagonal augmented Lagrangian (BDAL) preconditioning for the KKT
//! systems of linear PDE-constrained inverse problems.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: CSR and dense matrices, Jacobi eigensolver, Cholesky and
//!   Bunch–Kaufman LDLᵀ factorizations.
//! * [`krylov`]: preconditioned MINRES and CG with per-iteration histories.
//! * [`fem`]: P1 finite elements on structured triangulations of a
//!   rectangle (mass, Nitsche stiffness, Neumann regularization, point
//!   observations, image ingestion).
//! * [`inverse`]: the discrete KKT system for Poisson source inversion, the
//!   BDAL preconditioner variants and the reduced-Hessian baseline.
//! * [`spectral`]: dense verification of the condition-number theory and the
//!   spectral-filter model.
//! * [`harness`]: configuration, reproducible observation sampling and the
//!   experiment drivers behind the `bdal` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod error;
pub mod fem;
pub mod harness;
pub mod inverse;
pub mod krylov;
pub mod linalg;
pub mod spectral;

pub use error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s * x`
pub(crate) fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Relative 2-norm distance `‖a − b‖ / ‖b‖` (absolute when `b` is zero).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = norm2(b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
