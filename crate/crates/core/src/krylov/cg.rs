use std::sync::atomic::{AtomicUsize, Ordering};

use super::{check_square, History, LinearOperator, SolveOptions, SolveReport};
use crate::linalg::SparseMatrix;
use crate::{axpy, dot, norm2, Error, Result};

/// Preconditioned conjugate gradients for an SPD operator.
///
/// Convergence is measured in the preconditioned residual `sqrt(rᵀM⁻¹r)`
/// relative to its initial value; the initial guess is zero.
pub fn pcg<O, P>(op: &O, prec: &P, b: &[f64], options: &SolveOptions<'_>) -> Result<SolveReport>
where
    O: LinearOperator + ?Sized,
    P: LinearOperator + ?Sized,
{
    check_square(op, prec, b)?;
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = prec.apply_new(&r)?;
    let mut rz = dot(&r, &z);
    if rz < 0.0 {
        return Err(Error::Indefinite(rz));
    }
    let initial = rz.sqrt();
    let mut history = History::new(options, n, initial);
    if initial == 0.0 {
        return Ok(history.finish(x, true));
    }
    let target = options.tol * initial;
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    for k in 1..=options.maxit {
        op.apply(&p, &mut ap)?;
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 {
            return Err(Error::Indefinite(curvature));
        }
        let step = rz / curvature;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        prec.apply(&r, &mut z)?;
        let rz_next = dot(&r, &z);
        if rz_next < 0.0 {
            return Err(Error::Indefinite(rz_next));
        }
        let residual = rz_next.sqrt();
        let hit_error_target = history.record(k, residual, &x);
        if residual <= target || hit_error_target {
            return Ok(history.finish(x, residual <= target));
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(history.finish(x, false))
}

const RESIDUAL_REPLACEMENT_PERIOD: usize = 50;
const STAGNATION_FACTOR: f64 = 0.5;
const STAGNATION_PERIODS: usize = 4;

/// Jacobi-preconditioned CG run to a relative true-residual tolerance.
///
/// Implements [`LinearOperator`] as an approximate inverse, so it can serve
/// as a block of a preconditioner. With a loose tolerance the map is only
/// approximately linear.
pub struct JacobiCg<O> {
    op: O,
    inv_diag: Vec<f64>,
    tol: f64,
    maxit: usize,
    operator_norm: Option<f64>,
    iterations: AtomicUsize,
}

impl<O: LinearOperator> JacobiCg<O> {
    /// `diag` is a positive Jacobi scaling, normally the diagonal of `op`.
    pub fn new(op: O, diag: &[f64], tol: f64) -> Result<Self> {
        if diag.len() != op.nrows() || op.nrows() != op.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator {}x{} with diagonal of length {}",
                op.nrows(),
                op.ncols(),
                diag.len()
            )));
        }
        if let Some(row) = diag.iter().position(|&d| d.is_nan() || d <= 0.0) {
            return Err(Error::NotPositiveDefinite { row, pivot: diag[row] });
        }
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let n = diag.len();
        Ok(JacobiCg {
            op,
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
            tol,
            maxit: (20 * n).max(1000),
            operator_norm: None,
            iterations: AtomicUsize::new(0),
        })
    }

    pub fn with_maxit(mut self, maxit: usize) -> Self {
        self.maxit = maxit;
        self
    }

    /// When the true residual stagnates above `tol·‖b‖`, accepts `x` if the
    /// normwise backward error satisfies `‖b − Ax‖ ≤ tol·(‖A‖‖x‖ + ‖b‖)`,
    /// with `norm` an estimate of `‖A‖`.
    pub fn with_backward_error(mut self, norm: f64) -> Self {
        self.operator_norm = Some(norm);
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn accepts_backward_error(&self, rnorm: f64, bnorm: f64, x: &[f64]) -> bool {
        self.operator_norm
            .is_some_and(|norm| rnorm <= self.tol * (norm * norm2(x) + bnorm))
    }

    /// Total CG iterations spent across all solves so far.
    pub fn total_iterations(&self) -> usize {
        self.iterations.load(Ordering::Relaxed)
    }

    /// Returns `x` with `‖b − Ax‖ ≤ tol·‖b‖`, or with the backward-error
    /// test on stagnation when configured.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.inv_diag.len();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("right-hand side of length {} for dimension {n}", b.len())));
        }
        let bnorm = norm2(b);
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let target = self.tol * bnorm;
        let mut best = bnorm;
        let mut periods_without_progress = 0;
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let mut rnorm = bnorm;
        let mut k = 0;
        while k < self.maxit {
            k += 1;
            self.op.apply(&p, &mut ap)?;
            let curvature = dot(&p, &ap);
            if curvature <= 0.0 {
                self.iterations.fetch_add(k, Ordering::Relaxed);
                return Err(Error::Indefinite(curvature));
            }
            let step = rz / curvature;
            axpy(step, &p, &mut x);
            if k % RESIDUAL_REPLACEMENT_PERIOD == 0 {
                rnorm = self.true_residual(b, &x, &mut r, &mut ap)?;
                if rnorm < STAGNATION_FACTOR * best {
                    best = rnorm;
                    periods_without_progress = 0;
                } else {
                    periods_without_progress += 1;
                }
                if periods_without_progress >= STAGNATION_PERIODS && self.accepts_backward_error(rnorm, bnorm, &x) {
                    self.iterations.fetch_add(k, Ordering::Relaxed);
                    return Ok(x);
                }
            } else {
                axpy(-step, &ap, &mut r);
                rnorm = norm2(&r);
            }
            if rnorm <= target {
                // The recursive residual can drift; confirm before returning.
                rnorm = self.true_residual(b, &x, &mut r, &mut ap)?;
                if rnorm <= target {
                    self.iterations.fetch_add(k, Ordering::Relaxed);
                    return Ok(x);
                }
            }
            for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&self.inv_diag) {
                *zi = ri * di;
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        self.iterations.fetch_add(k, Ordering::Relaxed);
        Err(Error::MaxIterations {
            iterations: k,
            achieved: rnorm / bnorm,
            tol: self.tol,
        })
    }

    fn true_residual(&self, b: &[f64], x: &[f64], r: &mut [f64], scratch: &mut [f64]) -> Result<f64> {
        self.op.apply(x, scratch)?;
        for ((ri, bi), ai) in r.iter_mut().zip(b).zip(scratch.iter()) {
            *ri = bi - ai;
        }
        Ok(norm2(r))
    }
}

impl<O: LinearOperator> LinearOperator for JacobiCg<O> {
    fn nrows(&self) -> usize {
        self.inv_diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        super::operator::check_dims(self, x, y)?;
        y.copy_from_slice(&self.solve(x)?);
        Ok(())
    }
}

/// Solves the SPD system `m x = b` to `‖b − mx‖ ≤ tol·‖b‖` by Jacobi CG.
pub fn inner_solve_to_tol(m: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    JacobiCg::new(m, &m.diagonal(), tol)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{minres, DiagonalOperator, IdentityOperator};
    use crate::linalg::{DenseMatrix, TripletBuilder};

    fn laplacian_2d(m: usize) -> SparseMatrix {
        let n = m * m;
        let mut t = TripletBuilder::new(n, n);
        for j in 0..m {
            for i in 0..m {
                let k = i + j * m;
                t.push(k, k, 4.0 + 1e-3);
                if i > 0 {
                    t.push(k, k - 1, -1.0);
                }
                if i + 1 < m {
                    t.push(k, k + 1, -1.0);
                }
                if j > 0 {
                    t.push(k, k - m, -1.0);
                }
                if j + 1 < m {
                    t.push(k, k + m, -1.0);
                }
            }
        }
        t.build().unwrap()
    }

    #[test]
    fn pcg_diagonal_example() {
        let op = DiagonalOperator(vec![1.0, 2.0, 3.0]);
        let r = pcg(&op, &IdentityOperator(3), &[1.0, 1.0, 1.0], &SolveOptions::new(1e-12, 10)).unwrap();
        assert!(r.converged && r.iterations <= 3);
        for (x, y) in r.solution.iter().zip(&[1.0, 0.5, 1.0 / 3.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        let id = pcg(&IdentityOperator(4), &IdentityOperator(4), &[1.0, 2.0, 3.0, 4.0], &SolveOptions::new(1e-12, 10)).unwrap();
        assert_eq!(id.iterations, 1);
    }

    #[test]
    fn pcg_detects_indefinite_operator() {
        let op = DiagonalOperator(vec![1.0, -1.0]);
        let res = pcg(&op, &IdentityOperator(2), &[0.0, 1.0], &SolveOptions::new(1e-12, 10));
        assert!(matches!(res, Err(Error::Indefinite(_))));
    }

    #[test]
    fn minres_and_pcg_agree_on_spd() {
        let a = laplacian_2d(12);
        let b: Vec<f64> = (0..a.nrows()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let tol = 1e-10;
        let jac = DiagonalOperator(a.diagonal().iter().map(|d| 1.0 / d).collect());
        let c = pcg(&a, &jac, &b, &SolveOptions::new(tol, 1000)).unwrap();
        let m = minres(&a, &jac, &b, &SolveOptions::new(tol, 1000)).unwrap();
        assert!(c.converged && m.converged);
        assert!(crate::relative_error(&m.solution, &c.solution) <= 10.0 * tol);
    }

    #[test]
    fn inner_solve_examples() {
        let m = SparseMatrix::from_diagonal(&[4.0]);
        let x = inner_solve_to_tol(&m, &[8.0], 1e-3).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        let id = SparseMatrix::identity(3);
        assert_eq!(inner_solve_to_tol(&id, &[1.0, 2.0, 3.0], 1e-12).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn inner_solve_meets_true_residual() {
        let a = laplacian_2d(20);
        let b: Vec<f64> = (0..a.nrows()).map(|i| (i as f64 * 0.37).sin()).collect();
        for tol in [1e-2, 1e-6, 1e-12] {
            let x = inner_solve_to_tol(&a, &b, tol).unwrap();
            let ax = a.spmv(&x).unwrap();
            let res: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            assert!(norm2(&res) <= tol * norm2(&b), "tol={tol}");
        }
    }

    #[test]
    fn inner_solve_reports_stagnation() {
        let a = laplacian_2d(20);
        let b = vec![1.0; a.nrows()];
        let solver = JacobiCg::new(&a, &a.diagonal(), 1e-12).unwrap().with_maxit(3);
        match solver.solve(&b) {
            Err(Error::MaxIterations { iterations, achieved, .. }) => {
                assert_eq!(iterations, 3);
                assert!(achieved > 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inner_solve_rejects_nonpositive_diagonal() {
        let m = DenseMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            JacobiCg::new(&m, &[1.0, 0.0], 1e-8),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
    }
}
