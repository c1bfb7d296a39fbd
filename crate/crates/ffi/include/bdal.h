#ifndef BDAL_H
#define BDAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Preconditioner of the KKT system.
typedef enum BdalPreconditioner {
  BDAL_PRECONDITIONER_EXACT = 0,
  BDAL_PRECONDITIONER_LUMPED_EXACT = 1,
  BDAL_PRECONDITIONER_LUMPED_INEXACT = 2,
} BdalPreconditioner;

// Result code of every fallible call.
typedef enum BdalStatus {
  BDAL_STATUS_OK = 0,
  BDAL_STATUS_NULL_POINTER = 1,
  BDAL_STATUS_INVALID_ARGUMENT = 2,
  BDAL_STATUS_DIMENSION_MISMATCH = 3,
  BDAL_STATUS_NOT_CONVERGED = 4,
  BDAL_STATUS_NUMERICAL_FAILURE = 5,
  BDAL_STATUS_THEORY_VIOLATION = 6,
  BDAL_STATUS_TOO_LARGE = 7,
  BDAL_STATUS_PANIC = 8,
} BdalStatus;

// An assembled source-inversion KKT system.
typedef struct BdalProblem BdalProblem;

// Dense conditioning measurements of a preconditioned KKT system.
typedef struct BdalConditionReport {
  double sigma_min_e;
  double sigma_max_e;
  double cond_e;
  double delta;
  double beta;
  double bound_cond;
  double bound_sigma_min;
  double sigma_min_y;
  double lambda_min_augmented;
  // Number of bounds that fail beyond the slack.
  uint32_t violations;
} BdalConditionReport;

// Damped-projector constants `δ` and `β`.
typedef struct BdalConstants {
  double delta;
  double beta;
} BdalConstants;

// Message of the last failed call on this thread, or null if none failed.
// The pointer stays valid until the next failing call on the same thread.
const char *bdal_last_error_message(void);

// Library version as a static nul-terminated string.
const char *bdal_version(void);

// Samples `n_obs` observation points in `(0, lx) × (0, ly)` from `seed`
// and writes them to `points_out` as `x0, y0, x1, y1, ...`.
//
// # Safety
//
// `points_out` must be valid for `2 * n_obs` writes.
enum BdalStatus bdal_generate_observations(uint64_t seed,
                                           uintptr_t n_obs,
                                           double lx,
                                           double ly,
                                           double *points_out);

// Assembles the KKT system on an `nx × ny` mesh of `[0, lx] × [0, ly]`
// with `n_obs` observation points (`x0, y0, ...`). Data are synthesized
// from `source`, one value per vertex, or from the built-in synthetic
// source when `source` is null.
//
// # Safety
//
// `points` must be valid for `2 * n_obs` reads, `source` (when non-null)
// for as many reads as the mesh has vertices, and `out` for one write.
enum BdalStatus bdal_problem_new(double lx,
                                 double ly,
                                 uintptr_t nx,
                                 uintptr_t ny,
                                 const double *points,
                                 uintptr_t n_obs,
                                 double alpha,
                                 const double *source,
                                 struct BdalProblem **out);

// Releases a problem; null is ignored.
//
// # Safety
//
// `problem` must come from [`bdal_problem_new`] and not be used afterwards.
void bdal_problem_free(struct BdalProblem *problem);

// Number of mesh vertices, i.e. the length of the parameter vector; zero
// for a null handle.
//
// # Safety
//
// `problem` must be null or a live handle.
uintptr_t bdal_problem_num_parameters(const struct BdalProblem *problem);

// Parameter block of the dense factorized KKT solution.
//
// # Safety
//
// `problem` must be a live handle and `q_out` valid for `q_len` writes.
enum BdalStatus bdal_problem_reference(const struct BdalProblem *problem,
                                       double *q_out,
                                       uintptr_t q_len);

// Solves the KKT system with preconditioned MINRES to relative residual
// `tol` and writes the parameter block. `rho <= 0` selects `√α`.
// Returns [`BdalStatus::NotConverged`] (with `q_out` and `iterations_out`
// still filled) when `maxit` is reached first.
//
// # Safety
//
// `problem` must be a live handle, `q_out` valid for `q_len` writes and
// `iterations_out` null or valid for one write.
enum BdalStatus bdal_problem_solve(const struct BdalProblem *problem,
                                   enum BdalPreconditioner preconditioner,
                                   double rho,
                                   double tol,
                                   uintptr_t maxit,
                                   double *q_out,
                                   uintptr_t q_len,
                                   uintptr_t *iterations_out);

// Dense conditioning analysis with the unlumped BDAL preconditioner
// (`rho <= 0` selects `√α`). Returns [`BdalStatus::TheoryViolation`] when
// any bound fails; `report_out` is filled in either case.
//
// # Safety
//
// `problem` must be a live handle and `report_out` valid for one write.
enum BdalStatus bdal_problem_verify_theory(const struct BdalProblem *problem,
                                           double rho,
                                           struct BdalConditionReport *report_out);

// Largest singular value of the saddle-point stability matrix
// `Ψ = [[1/a, (1 + b/a)/c], [(1 + b/a)/c, (b/c²)(1 + b/a)]]`, for positive
// `a`, `b`, `c`.
//
// # Safety
//
// `out` must be valid for one write.
enum BdalStatus bdal_psi_sigma_max(double a, double b, double c, double *out);

// Filter-model constants from the bounds `c_u` and `c_o`, and optionally
// the exact constants, for spectral coefficients `d` and `r` of length `len`.
//
// # Safety
//
// `d` and `r` must be valid for `len` reads, `filter_out` for one write,
// and `exact_out` null or valid for one write.
enum BdalStatus bdal_filter_constants(const double *d,
                                      const double *r,
                                      uintptr_t len,
                                      double alpha,
                                      double rho,
                                      double c_u,
                                      double c_o,
                                      struct BdalConstants *filter_out,
                                      struct BdalConstants *exact_out);

#endif  /* BDAL_H */
