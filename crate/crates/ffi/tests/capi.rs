use std::ffi::CStr;
use std::ptr;

use bdal_ffi::*;

const LX: f64 = 1.45;
const LY: f64 = 1.0;

fn last_error() -> String {
    let p = bdal_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn problem(nx: usize, ny: usize, n_obs: usize, alpha: f64) -> *mut BdalProblem {
    let mut points = vec![0.0; 2 * n_obs];
    unsafe {
        assert_eq!(bdal_generate_observations(3, n_obs, LX, LY, points.as_mut_ptr()), BdalStatus::Ok);
        let mut handle = ptr::null_mut();
        let status = bdal_problem_new(LX, LY, nx, ny, points.as_ptr(), n_obs, alpha, ptr::null(), &mut handle);
        assert_eq!(status, BdalStatus::Ok);
        assert!(!handle.is_null());
        handle
    }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

#[test]
fn solve_matches_reference() {
    let p = problem(6, 4, 30, 1e-4);
    unsafe {
        let n = bdal_problem_num_parameters(p);
        assert_eq!(n, 35);
        let mut reference = vec![0.0; n];
        assert_eq!(bdal_problem_reference(p, reference.as_mut_ptr(), n), BdalStatus::Ok);
        for kind in [
            BdalPreconditioner::Exact,
            BdalPreconditioner::LumpedExact,
            BdalPreconditioner::LumpedInexact,
        ] {
            let mut q = vec![0.0; n];
            let mut iterations = 0;
            let status = bdal_problem_solve(p, kind, 0.0, 1e-12, 500, q.as_mut_ptr(), n, &mut iterations);
            assert_eq!(status, BdalStatus::Ok, "{kind:?}: {}", last_error());
            assert!(iterations > 0);
            assert!(rel(&q, &reference) < 1e-6, "{kind:?}");
        }
        bdal_problem_free(p);
    }
}

#[test]
fn theory_report_passes() {
    let p = problem(5, 4, 20, 1e-2);
    let mut report = BdalConditionReport::default();
    unsafe {
        assert_eq!(bdal_problem_verify_theory(p, 0.0, &mut report), BdalStatus::Ok);
        bdal_problem_free(p);
    }
    assert_eq!(report.violations, 0);
    assert!(report.sigma_max_e <= 2.0 + 1e-8);
    assert!(report.cond_e <= report.bound_cond);
    assert!(report.beta < 1.0 && report.delta > 0.0);
}

#[test]
fn truncated_solve_reports_not_converged() {
    let p = problem(6, 4, 30, 1e-6);
    unsafe {
        let n = bdal_problem_num_parameters(p);
        let mut q = vec![0.0; n];
        let mut iterations = 0;
        let status = bdal_problem_solve(
            p,
            BdalPreconditioner::LumpedExact,
            0.0,
            1e-12,
            2,
            q.as_mut_ptr(),
            n,
            &mut iterations,
        );
        assert_eq!(status, BdalStatus::NotConverged);
        assert_eq!(iterations, 2);
        assert!(last_error().contains("MINRES"));
        bdal_problem_free(p);
    }
}

#[test]
fn argument_errors() {
    unsafe {
        let mut handle = ptr::null_mut();
        let pts = [0.5, 0.5];
        assert_eq!(
            bdal_problem_new(LX, LY, 0, 4, pts.as_ptr(), 1, 1e-2, ptr::null(), &mut handle),
            BdalStatus::InvalidArgument
        );
        assert!(handle.is_null());
        assert_eq!(
            bdal_problem_new(LX, LY, 4, 4, ptr::null(), 1, 1e-2, ptr::null(), &mut handle),
            BdalStatus::NullPointer
        );
        assert_eq!(
            bdal_problem_new(LX, LY, 4, 4, pts.as_ptr(), 1, -1.0, ptr::null(), &mut handle),
            BdalStatus::InvalidArgument
        );
        assert!(last_error().contains("alpha"));

        let p = problem(4, 3, 10, 1e-2);
        let mut q = vec![0.0; 3];
        assert_eq!(bdal_problem_reference(p, q.as_mut_ptr(), 3), BdalStatus::DimensionMismatch);
        assert_eq!(
            bdal_problem_solve(p, BdalPreconditioner::Exact, 0.0, 2.0, 10, q.as_mut_ptr(), 20, ptr::null_mut()),
            BdalStatus::InvalidArgument
        );
        bdal_problem_free(p);
        bdal_problem_free(ptr::null_mut());
        assert_eq!(bdal_problem_num_parameters(ptr::null()), 0);
    }
}

#[test]
fn observations_are_reproducible() {
    let mut a = vec![0.0; 20];
    let mut b = vec![0.0; 20];
    unsafe {
        assert_eq!(bdal_generate_observations(1, 10, LX, LY, a.as_mut_ptr()), BdalStatus::Ok);
        assert_eq!(bdal_generate_observations(1, 10, LX, LY, b.as_mut_ptr()), BdalStatus::Ok);
        assert_eq!(bdal_generate_observations(1, 10, LX, LY, ptr::null_mut()), BdalStatus::NullPointer);
    }
    assert_eq!(a, b);
    assert_eq!(a[0], 10451216379200822465u64 as f64 / 2f64.powi(64) * LX);
    assert!(a.chunks(2).all(|p| p[0] > 0.0 && p[0] < LX && p[1] > 0.0 && p[1] < LY));
}

#[test]
fn spectral_tools() {
    let mut s = 0.0;
    unsafe {
        assert_eq!(bdal_psi_sigma_max(1.0, 1.0, 1.0, &mut s), BdalStatus::Ok);
        assert_eq!(bdal_psi_sigma_max(-1.0, 1.0, 1.0, &mut s), BdalStatus::InvalidArgument);
    }
    let psi = [[1.0, 2.0], [2.0, 2.0]];
    let tr: f64 = psi[0][0] + psi[1][1];
    let det = psi[0][0] * psi[1][1] - psi[0][1] * psi[1][0];
    let largest = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
    assert!((s - largest).abs() < 1e-12);

    let d: Vec<f64> = (1..=50).map(|k| 1.0 / k as f64).collect();
    let r: Vec<f64> = (1..=50).map(|k| k as f64).collect();
    let alpha: f64 = 1e-4;
    let rho = alpha.sqrt();
    let c_u = d.iter().zip(&r).map(|(d, r)| d * d + alpha * r * r).fold(f64::INFINITY, f64::min);
    let mut filter = BdalConstants::default();
    let mut exact = BdalConstants::default();
    unsafe {
        let status =
            bdal_filter_constants(d.as_ptr(), r.as_ptr(), d.len(), alpha, rho, c_u, 1.0, &mut filter, &mut exact);
        assert_eq!(status, BdalStatus::Ok, "{}", last_error());
        let status = bdal_filter_constants(
            d.as_ptr(),
            r.as_ptr(),
            d.len(),
            alpha,
            rho,
            2.0 * c_u,
            1.0,
            &mut filter,
            ptr::null_mut(),
        );
        assert_eq!(status, BdalStatus::InvalidArgument);
    }
    assert!(exact.delta >= filter.delta - 1e-12);
    assert!(exact.beta <= filter.beta + 1e-12);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bdal.h")).unwrap();
    for symbol in [
        "bdal_last_error_message",
        "bdal_version",
        "bdal_generate_observations",
        "bdal_problem_new",
        "bdal_problem_free",
        "bdal_problem_num_parameters",
        "bdal_problem_reference",
        "bdal_problem_solve",
        "bdal_problem_verify_theory",
        "bdal_psi_sigma_max",
        "bdal_filter_constants",
        "typedef struct BdalProblem BdalProblem",
        "BDAL_STATUS_THEORY_VIOLATION = 6",
    ] {
        assert!(header.contains(symbol), "missing {symbol}");
    }
    let version = unsafe { CStr::from_ptr(bdal_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
