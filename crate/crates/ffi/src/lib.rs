//! C ABI for `bdal-core`.
//!
//! Problems are exposed as opaque [`BdalProblem`] handles created by
//! [`bdal_problem_new`] and released by [`bdal_problem_free`]. Every
//! fallible function returns a [`BdalStatus`]; on failure the message is
//! available from [`bdal_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use bdal_core::fem::TriMesh;
use bdal_core::harness::{generate_observations, synth_source};
use bdal_core::inverse::{
    reference_solution, KktSystem, Preconditioner, PreconditionerKind, PreconditionerSettings, ProblemOperators,
    DEFAULT_INEXACT_TOL,
};
use bdal_core::krylov::{minres, SolveOptions};
use bdal_core::spectral::{
    analyze_bounds, damped_projector_constants_exact, filter_constants, psi_sigma_max, SpectralFilterModel,
};
use bdal_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotConverged = 4,
    NumericalFailure = 5,
    TheoryViolation = 6,
    TooLarge = 7,
    Panic = 8,
}

/// Preconditioner of the KKT system.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdalPreconditioner {
    Exact = 0,
    LumpedExact = 1,
    LumpedInexact = 2,
}

impl From<BdalPreconditioner> for PreconditionerKind {
    fn from(p: BdalPreconditioner) -> Self {
        match p {
            BdalPreconditioner::Exact => PreconditionerKind::BdalExact,
            BdalPreconditioner::LumpedExact => PreconditionerKind::BdalLumpedExact,
            BdalPreconditioner::LumpedInexact => PreconditionerKind::BdalLumpedInexact,
        }
    }
}

/// Damped-projector constants `δ` and `β`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BdalConstants {
    pub delta: f64,
    pub beta: f64,
}

/// Dense conditioning measurements of a preconditioned KKT system.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BdalConditionReport {
    pub sigma_min_e: f64,
    pub sigma_max_e: f64,
    pub cond_e: f64,
    pub delta: f64,
    pub beta: f64,
    pub bound_cond: f64,
    pub bound_sigma_min: f64,
    pub sigma_min_y: f64,
    pub lambda_min_augmented: f64,
    /// Number of bounds that fail beyond the slack.
    pub violations: u32,
}

/// An assembled source-inversion KKT system.
pub struct BdalProblem {
    system: KktSystem,
    n: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(error: &Error) -> BdalStatus {
    match error.root() {
        Error::InvalidArgument(_) | Error::Parse(_) | Error::Location { .. } | Error::AssumptionViolated { .. } => {
            BdalStatus::InvalidArgument
        }
        Error::DimensionMismatch(_) => BdalStatus::DimensionMismatch,
        Error::MaxIterations { .. } => BdalStatus::NotConverged,
        Error::TheoryViolation(_) => BdalStatus::TheoryViolation,
        Error::TooLarge { .. } => BdalStatus::TooLarge,
        _ => BdalStatus::NumericalFailure,
    }
}

/// Runs `f`, translating errors and panics into a status and recording the
/// message.
fn guard(f: impl FnOnce() -> Result<(), (BdalStatus, String)>) -> BdalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BdalStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {message}"));
            BdalStatus::Panic
        }
    }
}

fn core<T>(r: bdal_core::Result<T>) -> Result<T, (BdalStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (BdalStatus, String) {
    (BdalStatus::NullPointer, format!("{name} is null"))
}

fn invalid(message: String) -> (BdalStatus, String) {
    (BdalStatus::InvalidArgument, message)
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bdal_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn bdal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples `n_obs` observation points in `(0, lx) × (0, ly)` from `seed`
/// and writes them to `points_out` as `x0, y0, x1, y1, ...`.
///
/// # Safety
///
/// `points_out` must be valid for `2 * n_obs` writes.
#[no_mangle]
pub unsafe extern "C" fn bdal_generate_observations(
    seed: u64,
    n_obs: usize,
    lx: f64,
    ly: f64,
    points_out: *mut f64,
) -> BdalStatus {
    guard(|| {
        if points_out.is_null() {
            return Err(null("points_out"));
        }
        let set = core(generate_observations(seed, n_obs, lx, ly))?;
        let out = slice::from_raw_parts_mut(points_out, 2 * n_obs);
        for (chunk, p) in out.chunks_exact_mut(2).zip(set.points()) {
            chunk.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Assembles the KKT system on an `nx × ny` mesh of `[0, lx] × [0, ly]`
/// with `n_obs` observation points (`x0, y0, ...`). Data are synthesized
/// from `source`, one value per vertex, or from the built-in synthetic
/// source when `source` is null.
///
/// # Safety
///
/// `points` must be valid for `2 * n_obs` reads, `source` (when non-null)
/// for as many reads as the mesh has vertices, and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn bdal_problem_new(
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    points: *const f64,
    n_obs: usize,
    alpha: f64,
    source: *const f64,
    out: *mut *mut BdalProblem,
) -> BdalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if points.is_null() {
            return Err(null("points"));
        }
        let coords = slice::from_raw_parts(points, 2 * n_obs);
        let points: Vec<[f64; 2]> = coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let mesh = core(TriMesh::new(lx, ly, nx, ny))?;
        let q = if source.is_null() {
            synth_source(&mesh).into_values()
        } else {
            slice::from_raw_parts(source, mesh.num_vertices()).to_vec()
        };
        let ops = core(ProblemOperators::assemble(&mesh, &points))?;
        let data = core(ops.synthesize_data(&q))?;
        let system = core(KktSystem::build(&ops, alpha, &data))?;
        let n = system.n();
        *out = Box::into_raw(Box::new(BdalProblem { system, n }));
        Ok(())
    })
}

/// Releases a problem; null is ignored.
///
/// # Safety
///
/// `problem` must come from [`bdal_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bdal_problem_free(problem: *mut BdalProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of mesh vertices, i.e. the length of the parameter vector; zero
/// for a null handle.
///
/// # Safety
///
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bdal_problem_num_parameters(problem: *const BdalProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.n)
}

unsafe fn parameter_out<'a>(
    problem: *const BdalProblem,
    q_out: *mut f64,
    q_len: usize,
) -> Result<(&'a BdalProblem, &'a mut [f64]), (BdalStatus, String)> {
    let p = problem.as_ref().ok_or_else(|| null("problem"))?;
    if q_out.is_null() {
        return Err(null("q_out"));
    }
    if q_len != p.n {
        return Err((
            BdalStatus::DimensionMismatch,
            format!("q_out has length {q_len}, the problem has {} parameters", p.n),
        ));
    }
    Ok((p, slice::from_raw_parts_mut(q_out, q_len)))
}

/// Parameter block of the dense factorized KKT solution.
///
/// # Safety
///
/// `problem` must be a live handle and `q_out` valid for `q_len` writes.
#[no_mangle]
pub unsafe extern "C" fn bdal_problem_reference(
    problem: *const BdalProblem,
    q_out: *mut f64,
    q_len: usize,
) -> BdalStatus {
    guard(|| {
        let (p, q) = parameter_out(problem, q_out, q_len)?;
        let x = core(reference_solution(&p.system))?;
        q.copy_from_slice(&x[p.system.parameter_range()]);
        Ok(())
    })
}

/// Solves the KKT system with preconditioned MINRES to relative residual
/// `tol` and writes the parameter block. `rho <= 0` selects `√α`.
/// Returns [`BdalStatus::NotConverged`] (with `q_out` and `iterations_out`
/// still filled) when `maxit` is reached first.
///
/// # Safety
///
/// `problem` must be a live handle, `q_out` valid for `q_len` writes and
/// `iterations_out` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bdal_problem_solve(
    problem: *const BdalProblem,
    preconditioner: BdalPreconditioner,
    rho: f64,
    tol: f64,
    maxit: usize,
    q_out: *mut f64,
    q_len: usize,
    iterations_out: *mut usize,
) -> BdalStatus {
    guard(|| {
        let (p, q) = parameter_out(problem, q_out, q_len)?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid(format!("tol must lie in (0, 1), got {tol}")));
        }
        let settings = PreconditionerSettings {
            rho: (rho > 0.0).then_some(rho),
            inner_tol: DEFAULT_INEXACT_TOL,
        };
        let prec = core(Preconditioner::new(&p.system, preconditioner.into(), settings))?;
        let report = core(minres(&p.system, &prec, &p.system.rhs, &SolveOptions::new(tol, maxit)))?;
        q.copy_from_slice(&report.solution[p.system.parameter_range()]);
        if let Some(it) = iterations_out.as_mut() {
            *it = report.iterations;
        }
        if report.converged {
            Ok(())
        } else {
            Err((
                BdalStatus::NotConverged,
                format!("MINRES stopped after {} iterations above tol {tol:e}", report.iterations),
            ))
        }
    })
}

/// Dense conditioning analysis with the unlumped BDAL preconditioner
/// (`rho <= 0` selects `√α`). Returns [`BdalStatus::TheoryViolation`] when
/// any bound fails; `report_out` is filled in either case.
///
/// # Safety
///
/// `problem` must be a live handle and `report_out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bdal_problem_verify_theory(
    problem: *const BdalProblem,
    rho: f64,
    report_out: *mut BdalConditionReport,
) -> BdalStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let out = report_out.as_mut().ok_or_else(|| null("report_out"))?;
        let settings = PreconditionerSettings {
            rho: (rho > 0.0).then_some(rho),
            inner_tol: DEFAULT_INEXACT_TOL,
        };
        let prec = core(Preconditioner::new(&p.system, PreconditionerKind::BdalExact, settings))?;
        let r = core(analyze_bounds(&p.system, &prec))?;
        let violations = r.violations();
        *out = BdalConditionReport {
            sigma_min_e: r.sigma_min_e,
            sigma_max_e: r.sigma_max_e,
            cond_e: r.cond_e,
            delta: r.delta,
            beta: r.beta,
            bound_cond: r.bound_cond,
            bound_sigma_min: r.bound_sigma_min,
            sigma_min_y: r.sigma_min_y,
            lambda_min_augmented: r.lambda_min_augmented,
            violations: violations.len() as u32,
        };
        if violations.is_empty() {
            Ok(())
        } else {
            Err((BdalStatus::TheoryViolation, violations.join("; ")))
        }
    })
}

/// Largest singular value of the saddle-point stability matrix
/// `Ψ = [[1/a, (1 + b/a)/c], [(1 + b/a)/c, (b/c²)(1 + b/a)]]`, for positive
/// `a`, `b`, `c`.
///
/// # Safety
///
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bdal_psi_sigma_max(a: f64, b: f64, c: f64, out: *mut f64) -> BdalStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = core(psi_sigma_max(a, b, c))?;
        Ok(())
    })
}

/// Filter-model constants from the bounds `c_u` and `c_o`, and optionally
/// the exact constants, for spectral coefficients `d` and `r` of length `len`.
///
/// # Safety
///
/// `d` and `r` must be valid for `len` reads, `filter_out` for one write,
/// and `exact_out` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bdal_filter_constants(
    d: *const f64,
    r: *const f64,
    len: usize,
    alpha: f64,
    rho: f64,
    c_u: f64,
    c_o: f64,
    filter_out: *mut BdalConstants,
    exact_out: *mut BdalConstants,
) -> BdalStatus {
    guard(|| {
        if d.is_null() || r.is_null() {
            return Err(null("d or r"));
        }
        let out = filter_out.as_mut().ok_or_else(|| null("filter_out"))?;
        let model = core(SpectralFilterModel::new(
            slice::from_raw_parts(d, len).to_vec(),
            slice::from_raw_parts(r, len).to_vec(),
            alpha,
            rho,
        ))?;
        if let Some(exact) = exact_out.as_mut() {
            let c = damped_projector_constants_exact(&model);
            *exact = BdalConstants {
                delta: c.delta,
                beta: c.beta,
            };
        }
        let c = core(filter_constants(&model, c_u, c_o))?;
        *out = BdalConstants {
            delta: c.delta,
            beta: c.beta,
        };
        Ok(())
    })
}
