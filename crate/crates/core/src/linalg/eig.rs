//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use super::DenseMatrix;
use crate::{Error, Result};

/// Relative asymmetry accepted by [`symmetric_eig`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// `Q f(Λ) Qᵀ`
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut scaled = q.clone();
        for i in 0..n {
            for (k, v) in scaled.row_mut(i).iter_mut().enumerate() {
                *v *= fl[k];
            }
        }
        let mut out = scaled.matmul(&q.transpose()).expect("square factors");
        out.symmetrize();
        out
    }

    /// `Q Λ Qᵀ`
    pub fn reconstruct(&self) -> DenseMatrix {
        self.apply_function(|l| l)
    }
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = m.symmetry_defect();
    if defect > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(defect));
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix.
pub fn symmetric_eig(m: &DenseMatrix) -> Result<EigenDecomposition> {
    check_symmetric(m)?;
    let (values, vectors) = jacobi(m, true);
    let vt = vectors.expect("vectors requested");
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    // `vt` holds eigenvectors as rows.
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| vt[(order[j], i)]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (ascending), via Householder tridiagonalization and
/// implicit QL. Much cheaper than Jacobi for the large verification spectra.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    super::tridiag::eigenvalues(m)
}

/// Eigenvalues only (ascending) by cyclic Jacobi, skipping the eigenvector
/// accumulation.
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let (mut values, _) = jacobi(m, false);
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn jacobi(m: &DenseMatrix, want_vectors: bool) -> (Vec<f64>, Option<DenseMatrix>) {
    let n = m.nrows();
    let mut a = m.clone();
    a.symmetrize();
    let mut vt = want_vectors.then(|| DenseMatrix::identity(n));
    if n == 0 {
        return (Vec::new(), vt);
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return (vec![0.0; n], vt);
    }

    let mut row_p = vec![0.0; n];
    let mut row_q = vec![0.0; n];
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .map(|i| a.row(i)[..i].iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 0.25 * scale {
            break;
        }
        // Threshold variant: the first sweeps only annihilate large entries.
        let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let small = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + small == app.abs() && aqq.abs() + small == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s, &mut row_p, &mut row_q);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                if let Some(v) = vt.as_mut() {
                    rotate_rows(v, p, q, c, s);
                }
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)]).collect();
    (values, vt)
}

/// Applies `Jᵀ A J` for the plane rotation in (p, q); diagonal entries of p
/// and q are fixed up by the caller.
fn rotate(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, row_p: &mut [f64], row_q: &mut [f64]) {
    let n = a.nrows();
    row_p.copy_from_slice(a.row(p));
    row_q.copy_from_slice(a.row(q));
    for r in 0..n {
        let (x, y) = (row_p[r], row_q[r]);
        row_p[r] = c * x - s * y;
        row_q[r] = s * x + c * y;
    }
    a.row_mut(p).copy_from_slice(row_p);
    a.row_mut(q).copy_from_slice(row_q);
    for r in 0..n {
        a[(r, p)] = row_p[r];
        a[(r, q)] = row_q[r];
    }
}

fn rotate_rows(v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = v.ncols();
    for r in 0..n {
        let x = v[(p, r)];
        let y = v[(q, r)];
        v[(p, r)] = c * x - s * y;
        v[(q, r)] = s * x + c * y;
    }
}
