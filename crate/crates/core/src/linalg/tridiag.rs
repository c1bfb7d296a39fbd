//! Eigenvalues of a symmetric matrix by Householder tridiagonalization
//! followed by implicit QL iterations with Wilkinson shifts.

use super::DenseMatrix;
use crate::{Error, Result};

const MAX_QL_ITERATIONS: usize = 60;

pub(crate) fn eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    let (mut d, mut e) = tridiagonalize(m);
    ql_implicit(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Returns the diagonal and the subdiagonal (`e[i]` couples `i` and `i+1`,
/// last entry zero) of an orthogonally similar tridiagonal matrix.
fn tridiagonalize(m: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    a.symmetrize();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let norm: f64 = (lo..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        d[k] = a[(k, k)];
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[(lo, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        e[k] = alpha;
        for i in lo..n {
            v[i] = a[(i, k)];
        }
        v[lo] -= alpha;
        let vnorm: f64 = (lo..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        for vi in &mut v[lo..n] {
            *vi /= vnorm;
        }
        // w = A22 v, q = w − (vᵀw) v, A22 ← A22 − 2 v qᵀ − 2 q vᵀ
        for i in lo..n {
            let row = &a.row(i)[lo..n];
            w[i] = crate::dot(row, &v[lo..n]);
        }
        let vw = crate::dot(&v[lo..n], &w[lo..n]);
        for i in lo..n {
            w[i] -= vw * v[i];
        }
        for i in lo..n {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a.row_mut(i)[lo..n];
            for (j, aij) in row.iter_mut().enumerate() {
                *aij -= 2.0 * (vi * w[lo + j] + wi * v[lo + j]);
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2, n - 2)];
        e[n - 2] = a[(n - 1, n - 2)];
    }
    if n >= 1 {
        d[n - 1] = a[(n - 1, n - 1)];
        e[n - 1] = 0.0;
    }
    (d, e)
}

fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::MaxIterations {
                    iterations,
                    achieved: e[l].abs(),
                    tol: f64::EPSILON,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
