//! Dense Cholesky and symmetric-indefinite (Bunch–Kaufman LDLᵀ) solvers.

use super::DenseMatrix;
use crate::{Error, Result};

/// Lower Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("Cholesky of a non-square matrix".into()));
        }
        let n = m.nrows();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            d -= l.row(j)[..j].iter().map(|v| v * v).sum::<f64>();
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let s = m[(i, j)] - crate::dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.l.nrows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("rhs of length {} for order {n}", b.len())));
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let s = crate::dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = (y[i] - s) / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        Ok(y)
    }

    pub fn factor_matrix(&self) -> &DenseMatrix {
        &self.l
    }
}

/// Solves `M x = b` for symmetric positive definite `M`, with one step of
/// iterative refinement.
pub fn dense_solve_spd(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let chol = Cholesky::factor(m)?;
    let mut x = chol.solve(b)?;
    refine(m, b, &mut x, |r| chol.solve(r))?;
    Ok(x)
}

fn refine(
    m: &DenseMatrix,
    b: &[f64],
    x: &mut [f64],
    solve: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    let mx = m.matvec(x)?;
    let r: Vec<f64> = b.iter().zip(&mx).map(|(bi, ai)| bi - ai).collect();
    let dx = solve(&r)?;
    crate::axpy(1.0, &dx, x);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pivot {
    One,
    Two,
}

/// Factorization `Π M Πᵀ = L D Lᵀ` with unit lower `L` and block-diagonal
/// `D` of 1×1 and 2×2 blocks (Bunch–Kaufman partial pivoting).
#[derive(Debug, Clone)]
pub struct Ldlt {
    /// Strict lower triangle holds `L`; the diagonal blocks hold `D`.
    a: DenseMatrix,
    /// `perm[k]` is the original index at position `k`.
    perm: Vec<usize>,
    pivots: Vec<Pivot>,
}

impl Ldlt {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("LDLᵀ of a non-square matrix".into()));
        }
        let n = m.nrows();
        let mut a = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::with_capacity(n);
        let alpha = (1.0 + 17f64.sqrt()) / 8.0;
        let scale = m.values().iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let tiny = scale * 1e-14;

        let mut k = 0;
        while k < n {
            let absakk = a[(k, k)].abs();
            let (imax, colmax) = (k + 1..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });

            if absakk.max(colmax) <= tiny {
                return Err(Error::Singular(k));
            }

            let (kp, kind) = if absakk >= alpha * colmax {
                (k, Pivot::One)
            } else {
                // Largest off-diagonal magnitude in row/column imax of the
                // trailing matrix.
                let mut rowmax = 0.0f64;
                for j in k..imax {
                    rowmax = rowmax.max(a[(imax, j)].abs());
                }
                for i in imax + 1..n {
                    rowmax = rowmax.max(a[(i, imax)].abs());
                }
                if absakk * rowmax >= alpha * colmax * colmax {
                    (k, Pivot::One)
                } else if a[(imax, imax)].abs() >= alpha * rowmax {
                    (imax, Pivot::One)
                } else {
                    (imax, Pivot::Two)
                }
            };

            let kk = if kind == Pivot::One { k } else { k + 1 };
            if kp != kk {
                swap_symmetric(&mut a, kk, kp);
                perm.swap(kk, kp);
            }

            match kind {
                Pivot::One => {
                    let d = a[(k, k)];
                    if d.abs() <= tiny {
                        return Err(Error::Singular(k));
                    }
                    let col: Vec<f64> = (0..n).map(|i| if i > k { a[(i, k)] } else { 0.0 }).collect();
                    for i in k + 1..n {
                        let li = col[i] / d;
                        if li == 0.0 {
                            continue;
                        }
                        let row_i = a.row_mut(i);
                        for j in k + 1..=i {
                            row_i[j] -= li * col[j];
                        }
                        row_i[k] = li;
                    }
                    pivots.push(Pivot::One);
                    k += 1;
                }
                Pivot::Two => {
                    let d11 = a[(k, k)];
                    let d21 = a[(k + 1, k)];
                    let d22 = a[(k + 1, k + 1)];
                    let det = d11 * d22 - d21 * d21;
                    if det.abs() <= tiny * tiny {
                        return Err(Error::Singular(k));
                    }
                    // Multipliers [l_ik, l_ik+1] = [a_ik, a_ik+1] D⁻¹.
                    let mut l = vec![(0.0, 0.0); n];
                    for (i, li) in l.iter_mut().enumerate().skip(k + 2) {
                        let (x, y) = (a[(i, k)], a[(i, k + 1)]);
                        *li = ((d22 * x - d21 * y) / det, (d11 * y - d21 * x) / det);
                    }
                    let c1: Vec<f64> = (0..n).map(|i| if i > k + 1 { a[(i, k)] } else { 0.0 }).collect();
                    let c2: Vec<f64> = (0..n).map(|i| if i > k + 1 { a[(i, k + 1)] } else { 0.0 }).collect();
                    for i in k + 2..n {
                        let (l1, l2) = l[i];
                        if l1 == 0.0 && l2 == 0.0 {
                            continue;
                        }
                        let row_i = a.row_mut(i);
                        for j in k + 2..=i {
                            row_i[j] -= l1 * c1[j] + l2 * c2[j];
                        }
                    }
                    for (i, li) in l.iter().enumerate().skip(k + 2) {
                        a[(i, k)] = li.0;
                        a[(i, k + 1)] = li.1;
                    }
                    pivots.push(Pivot::Two);
                    pivots.push(Pivot::Two);
                    k += 2;
                }
            }
        }
        Ok(Ldlt { a, perm, pivots })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.perm.len();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("rhs of length {} for order {n}", b.len())));
        }
        let a = &self.a;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();

        // L z = Π b; L is unit lower with identity inside 2×2 blocks.
        let mut k = 0;
        while k < n {
            let width = if self.pivots[k] == Pivot::Two { 2 } else { 1 };
            for c in k..k + width {
                let yc = y[c];
                if yc != 0.0 {
                    for i in k + width..n {
                        y[i] -= a[(i, c)] * yc;
                    }
                }
            }
            k += width;
        }
        // D w = z
        let mut k = 0;
        while k < n {
            if self.pivots[k] == Pivot::Two {
                let (d11, d21, d22) = (a[(k, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
                let det = d11 * d22 - d21 * d21;
                let (x, z) = (y[k], y[k + 1]);
                y[k] = (d22 * x - d21 * z) / det;
                y[k + 1] = (d11 * z - d21 * x) / det;
                k += 2;
            } else {
                y[k] /= a[(k, k)];
                k += 1;
            }
        }
        // Lᵀ v = w
        let mut k = n;
        while k > 0 {
            let width = if k >= 2 && self.pivots[k - 1] == Pivot::Two { 2 } else { 1 };
            let start = k - width;
            for c in start..k {
                let mut s = y[c];
                for i in k..n {
                    s -= a[(i, c)] * y[i];
                }
                y[c] = s;
            }
            k = start;
        }
        let mut x = vec![0.0; n];
        for (pos, &orig) in self.perm.iter().enumerate() {
            x[orig] = y[pos];
        }
        Ok(x)
    }
}

/// Swaps indices `p < q` of a symmetric matrix stored in its lower triangle,
/// including the already-computed columns of `L`.
fn swap_symmetric(a: &mut DenseMatrix, p: usize, q: usize) {
    let (p, q) = if p < q { (p, q) } else { (q, p) };
    let n = a.nrows();
    for j in 0..p {
        let t = a[(p, j)];
        a[(p, j)] = a[(q, j)];
        a[(q, j)] = t;
    }
    let t = a[(p, p)];
    a[(p, p)] = a[(q, q)];
    a[(q, q)] = t;
    for j in p + 1..q {
        let t = a[(j, p)];
        a[(j, p)] = a[(q, j)];
        a[(q, j)] = t;
    }
    for i in q + 1..n {
        let t = a[(i, p)];
        a[(i, p)] = a[(i, q)];
        a[(i, q)] = t;
    }
}

/// Solves `M x = b` for symmetric, possibly indefinite, nonsingular `M`,
/// followed by one step of iterative refinement.
pub fn dense_solve_symmetric_indefinite(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if m.symmetry_defect() > super::eig::SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(m.symmetry_defect()));
    }
    let f = Ldlt::factor(m)?;
    let mut x = f.solve(b)?;
    refine(m, b, &mut x, |r| f.solve(r))?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
        let mx = m.matvec(x).unwrap();
        crate::relative_error(&mx, b)
    }

    #[test]
    fn spd_small_cases() {
        assert_eq!(dense_solve_spd(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let x = dense_solve_spd(&DenseMatrix::from_diagonal(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn spd_rejects_indefinite() {
        let m = DenseMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(dense_solve_spd(&m, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn indefinite_small_cases() {
        let x = dense_solve_symmetric_indefinite(&DenseMatrix::from_diagonal(&[1.0, -1.0]), &[1.0, 1.0]).unwrap();
        assert_eq!(x, vec![1.0, -1.0]);
        let swap = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let x = dense_solve_symmetric_indefinite(&swap, &[3.0, -7.0]).unwrap();
        assert_eq!(x, vec![-7.0, 3.0]);
    }

    #[test]
    fn indefinite_rejects_singular() {
        let m = DenseMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(dense_solve_symmetric_indefinite(&m, &[1.0, 1.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn saddle_point_residual() {
        // [[I, Bᵀ], [B, 0]] with a full-rank B forces 2×2 pivots.
        let n = 6;
        let m = DenseMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let (bi, bj) = (i / n, j / n);
            match (bi, bj) {
                (0, 0) => {
                    if i == j {
                        1.0 + 0.1 * i as f64
                    } else {
                        0.0
                    }
                }
                (1, 0) => (i % n == j % n) as u8 as f64 + 1.0 / ((i % n) as f64 + 2.0 * (j % n) as f64 + 1.0),
                (0, 1) => (i % n == j % n) as u8 as f64 + 1.0 / ((j % n) as f64 + 2.0 * (i % n) as f64 + 1.0),
                _ => 0.0,
            }
        });
        let b: Vec<f64> = (0..2 * n).map(|i| (i as f64 * 0.37).cos()).collect();
        let x = dense_solve_symmetric_indefinite(&m, &b).unwrap();
        assert!(residual(&m, &x, &b) < 1e-12);
    }
}
