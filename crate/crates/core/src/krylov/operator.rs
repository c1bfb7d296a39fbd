use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::{Error, Result};

/// A linear map `ℝⁿ → ℝᵐ` known only through its action.
///
/// Applications may fail (for instance when they involve inner iterative
/// solves), so `apply` returns a `Result`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;

    fn ncols(&self) -> usize {
        self.nrows()
    }

    /// `y = op(x)`; `x.len() == ncols()` and `y.len() == nrows()`.
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;

    fn apply_new(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows()];
        self.apply(x, &mut y)?;
        Ok(y)
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        SparseMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        SparseMatrix::ncols(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.spmv_into(x, y)
    }
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        DenseMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        DenseMatrix::ncols(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_dims(self, x, y)?;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = crate::dot(self.row(i), x);
        }
        Ok(())
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).apply(x, y)
    }
}

/// Estimates `‖op‖₂` of a symmetric operator by `iterations` steps of the
/// power method from a fixed start vector. The estimate is a lower bound.
pub fn estimate_norm<O: LinearOperator + ?Sized>(op: &O, iterations: usize) -> Result<f64> {
    let n = op.nrows();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract()).collect();
    let mut estimate = 0.0;
    let mut y = vec![0.0; n];
    for _ in 0..iterations.max(1) {
        let xnorm = crate::norm2(&x);
        if xnorm == 0.0 {
            return Ok(estimate);
        }
        x.iter_mut().for_each(|v| *v /= xnorm);
        op.apply(&x, &mut y)?;
        estimate = crate::norm2(&y);
        std::mem::swap(&mut x, &mut y);
    }
    Ok(estimate)
}

pub(crate) fn check_dims<O: LinearOperator + ?Sized>(op: &O, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != op.ncols() || y.len() != op.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, input length {}, output length {}",
            op.nrows(),
            op.ncols(),
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn nrows(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_dims(self, x, y)?;
        y.copy_from_slice(x);
        Ok(())
    }
}

/// `y = diag(d) x`
#[derive(Debug, Clone)]
pub struct DiagonalOperator(pub Vec<f64>);

impl LinearOperator for DiagonalOperator {
    fn nrows(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_dims(self, x, y)?;
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = di * xi;
        }
        Ok(())
    }
}

/// Square operator backed by a closure.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(n: usize, f: F) -> Self {
        FnOperator { n, f }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn nrows(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_dims(self, x, y)?;
        (self.f)(x, y)
    }
}

/// Dense matrix of an operator obtained by probing with unit vectors.
pub fn assemble_dense<O: LinearOperator + ?Sized>(op: &O) -> Result<DenseMatrix> {
    let (m, n) = (op.nrows(), op.ncols());
    let mut out = DenseMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col)?;
        e[j] = 0.0;
        for (i, v) in col.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}
