use std::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(nrows: usize, ncols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nrows * ncols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {nrows}x{ncols} matrix",
                values.len()
            )));
        }
        Ok(DenseMatrix { nrows, ncols, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            values: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                values.push(f(i, j));
            }
        }
        DenseMatrix { nrows, ncols, values }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| columns[j][i]))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "matvec of a {}x{} matrix with a vector of length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        Ok((0..self.nrows).map(|i| crate::dot(self.row(i), x)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            let out_row = &mut out.values[i * other.ncols..(i + 1) * other.ncols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                crate::axpy(a, other.row(k), out_row);
            }
        }
        Ok(out)
    }

    /// `s·self + t·other`
    pub fn add_scaled(&self, other: &DenseMatrix, s: f64, t: f64) -> Result<DenseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch("dense add of unequal shapes".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| s * a + t * b).collect();
        Ok(DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            values,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::norm2(&self.values)
    }

    /// `‖M − Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut diff = 0.0;
        for i in 0..self.nrows {
            for j in 0..i {
                let d = self[(i, j)] - self[(j, i)];
                diff += 2.0 * d * d;
            }
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            diff.sqrt() / norm
        }
    }

    /// Replaces the matrix with `(M + Mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.nrows {
            for j in 0..i {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    pub fn block(&self, row0: usize, col0: usize, nrows: usize, ncols: usize) -> DenseMatrix {
        Self::from_fn(nrows, ncols, |i, j| self[(row0 + i, col0 + j)])
    }

    pub fn set_block(&mut self, row0: usize, col0: usize, block: &DenseMatrix) {
        for i in 0..block.nrows {
            for j in 0..block.ncols {
                self[(row0 + i, col0 + j)] = block[(i, j)];
            }
        }
    }

    /// Block-diagonal matrix assembled from square blocks.
    pub fn block_diagonal(blocks: &[&DenseMatrix]) -> DenseMatrix {
        let n: usize = blocks.iter().map(|b| b.nrows).sum();
        let m: usize = blocks.iter().map(|b| b.ncols).sum();
        let mut out = DenseMatrix::zeros(n, m);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.nrows;
            c += b.ncols;
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.ncols + j]
    }
}
