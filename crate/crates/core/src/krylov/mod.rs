//! Preconditioned Krylov solvers with iteration histories.

mod cg;
mod minres;
mod operator;

use std::ops::Range;
use std::time::Instant;

pub use cg::{inner_solve_to_tol, pcg, JacobiCg};
pub use minres::minres;
pub(crate) use operator::check_dims as check_operator_dims;
pub use operator::{assemble_dense, estimate_norm, DiagonalOperator, FnOperator, IdentityOperator, LinearOperator};

/// Lanczos `β` below this multiple of the initial residual is a happy
/// breakdown.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-14;

/// Reference solution against which per-iteration errors are tracked.
///
/// Only the entries in `range` are compared, e.g. the parameter block of a
/// KKT solution.
#[derive(Debug, Clone)]
pub struct Reference<'a> {
    pub solution: &'a [f64],
    pub range: Range<usize>,
}

impl Reference<'_> {
    /// `‖x[range] − ref[range]‖ / ‖ref[range]‖`
    pub fn relative_error(&self, x: &[f64]) -> f64 {
        let r = self.range.clone();
        crate::relative_error(&x[r.clone()], &self.solution[r])
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions<'a> {
    /// Relative reduction of the (preconditioned) residual norm.
    pub tol: f64,
    pub maxit: usize,
    pub reference: Option<Reference<'a>>,
    /// Stop as soon as the reference error drops below this value.
    pub stop_below_error: Option<f64>,
    /// Iteration numbers whose iterates are kept in the report.
    pub record_iterates: Vec<usize>,
}

impl<'a> SolveOptions<'a> {
    pub fn new(tol: f64, maxit: usize) -> Self {
        SolveOptions {
            tol,
            maxit,
            reference: None,
            stop_below_error: None,
            record_iterates: Vec::new(),
        }
    }

    pub fn with_reference(mut self, reference: Reference<'a>) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn stop_below_error(mut self, target: f64) -> Self {
        self.stop_below_error = Some(target);
        self
    }

    pub fn record_iterates(mut self, iterations: &[usize]) -> Self {
        self.record_iterates = iterations.to_vec();
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Lanczos breakdown with a nonzero residual.
    pub breakdown: bool,
    /// Preconditioned residual norms, starting with the initial one.
    pub residual_history: Vec<f64>,
    /// Relative reference errors, starting with the initial guess; empty
    /// without a reference.
    pub error_history: Vec<f64>,
    /// Seconds since the start of the solve at each recorded iteration,
    /// aligned with `residual_history`.
    pub elapsed: Vec<f64>,
    /// `(iteration, iterate)` pairs requested through
    /// [`SolveOptions::record_iterates`].
    pub iterates: Vec<(usize, Vec<f64>)>,
    pub solution: Vec<f64>,
}

impl SolveReport {
    /// First iteration whose reference error is below `target`.
    pub fn iterations_to_error(&self, target: f64) -> Option<usize> {
        self.error_history.iter().position(|&e| e < target)
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history starts with the initial residual")
    }
}

/// Shared per-iteration bookkeeping for the solvers.
struct History<'a, 'o> {
    options: &'o SolveOptions<'a>,
    start: Instant,
    report: SolveReport,
}

impl<'a, 'o> History<'a, 'o> {
    fn new(options: &'o SolveOptions<'a>, n: usize, initial_residual: f64) -> Self {
        let start = Instant::now();
        let mut h = History {
            options,
            start,
            report: SolveReport {
                iterations: 0,
                converged: false,
                breakdown: false,
                residual_history: vec![initial_residual],
                error_history: Vec::new(),
                elapsed: vec![0.0],
                iterates: Vec::new(),
                solution: vec![0.0; n],
            },
        };
        h.observe_iterate(0, &vec![0.0; n]);
        h
    }

    fn observe_iterate(&mut self, iteration: usize, x: &[f64]) {
        if let Some(reference) = &self.options.reference {
            self.report.error_history.push(reference.relative_error(x));
        }
        if self.options.record_iterates.contains(&iteration) {
            self.report.iterates.push((iteration, x.to_vec()));
        }
    }

    /// Records iteration `k`; returns true when the error target is met.
    fn record(&mut self, k: usize, residual: f64, x: &[f64]) -> bool {
        self.report.iterations = k;
        self.report.residual_history.push(residual);
        self.report.elapsed.push(self.start.elapsed().as_secs_f64());
        self.observe_iterate(k, x);
        match (self.options.stop_below_error, self.report.error_history.last()) {
            (Some(target), Some(&e)) => e < target,
            _ => false,
        }
    }

    fn finish(mut self, x: Vec<f64>, converged: bool) -> SolveReport {
        self.report.solution = x;
        self.report.converged = converged;
        self.report
    }
}

fn check_square<O: LinearOperator + ?Sized, P: LinearOperator + ?Sized>(
    op: &O,
    prec: &P,
    b: &[f64],
) -> crate::Result<()> {
    let n = b.len();
    if op.nrows() != n || op.ncols() != n || prec.nrows() != n || prec.ncols() != n {
        return Err(crate::Error::DimensionMismatch(format!(
            "operator {}x{}, preconditioner {}x{}, right-hand side {n}",
            op.nrows(),
            op.ncols(),
            prec.nrows(),
            prec.ncols()
        )));
    }
    Ok(())
}
