use super::DenseMatrix;
use crate::{Error, Result};

/// Real matrix in compressed sparse-row layout.
///
/// Column indices are strictly increasing within each row, so there are
/// never two stored entries for the same position.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format accumulator. Duplicate positions are summed by
/// [`TripletBuilder::build`].
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> Result<SparseMatrix> {
        SparseMatrix::from_triplets(self.nrows, self.ncols, &self.entries)
    }
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|(i, j, _)| *i >= nrows || *j >= ncols) {
            return Err(Error::DimensionMismatch(format!(
                "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("merged entry exists") += v;
                continue;
            }
            last = Some((i, j));
            row_offsets[i + 1] += 1;
            col_indices.push(j);
            values.push(v);
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Wraps raw CSR arrays after checking the layout invariants.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidArgument("row offsets must have length nrows+1 and start at 0".into()));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("row offsets must be nondecreasing".into()));
        }
        let nnz = row_offsets[nrows];
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidArgument(format!(
                "expected {nnz} stored entries, got {} indices and {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for i in 0..nrows {
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.iter().any(|&j| j >= ncols) {
                return Err(Error::InvalidArgument(format!("row {i} has a column index out of range")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} column indices are not strictly increasing"
                )));
            }
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = m x`
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "spmv with a {}x{} matrix, input length {}, output length {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            )));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Visiting rows in order keeps the transposed rows sorted.
        for i in 0..self.nrows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                let dst = next[j];
                col_indices[dst] = i;
                values[dst] = self.values[k];
                next[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// `s·self + t·other` over the union of both sparsity patterns.
    pub fn add_scaled(&self, other: &SparseMatrix, s: f64, t: f64) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        row_offsets.push(0);
        for i in 0..self.nrows {
            let (mut a, a_end) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let (mut b, b_end) = (other.row_offsets[i], other.row_offsets[i + 1]);
            while a < a_end || b < b_end {
                let ja = if a < a_end { self.col_indices[a] } else { usize::MAX };
                let jb = if b < b_end { other.col_indices[b] } else { usize::MAX };
                if ja == jb {
                    col_indices.push(ja);
                    values.push(s * self.values[a] + t * other.values[b]);
                    a += 1;
                    b += 1;
                } else if ja < jb {
                    col_indices.push(ja);
                    values.push(s * self.values[a]);
                    a += 1;
                } else {
                    col_indices.push(jb);
                    values.push(t * other.values[b]);
                    b += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `selfᵀ · diag(dinv) · self`, e.g. `AᵀW_L⁻¹A` with a lumped mass.
    pub fn triple_diag(&self, dinv: &[f64]) -> Result<SparseMatrix> {
        if dinv.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} for a matrix with {} rows",
                dinv.len(),
                self.nrows
            )));
        }
        if let Some((i, d)) = dinv.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "diagonal weight {d} at index {i} is not positive"
            )));
        }
        let mut triplets = Vec::new();
        for i in 0..self.nrows {
            let range = self.row_offsets[i]..self.row_offsets[i + 1];
            for ka in range.clone() {
                let wa = self.values[ka] * dinv[i];
                for kb in range.clone() {
                    triplets.push((self.col_indices[ka], self.col_indices[kb], wa * self.values[kb]));
                }
            }
        }
        SparseMatrix::from_triplets(self.ncols, self.ncols, &triplets)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Largest absolute row sum, an upper bound on the spectral norm of a
    /// symmetric matrix.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entrywise asymmetry `max |m_ij − m_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        let diff = self.add_scaled(&t, 1.0, -1.0).expect("square");
        diff.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseMatrix {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i > 0 {
                b.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn spmv_small_cases() {
        let id = SparseMatrix::identity(3);
        assert_eq!(id.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let z = SparseMatrix::zeros(3, 3);
        assert_eq!(z.spmv(&[4.0, -1.0, 7.0]).unwrap(), vec![0.0; 3]);
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(m.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn spmv_rejects_wrong_length() {
        let id = SparseMatrix::identity(3);
        assert!(matches!(id.spmv(&[1.0, 2.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 0.5)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 1.5);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn from_csr_validates_layout() {
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![0, 1], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn transpose_shapes() {
        assert_eq!(SparseMatrix::identity(4).transpose(), SparseMatrix::identity(4));
        let row = SparseMatrix::from_triplets(1, 2, &[(0, 0, 3.0), (0, 1, -2.0)]).unwrap();
        let col = row.transpose();
        assert_eq!((col.nrows(), col.ncols()), (2, 1));
        assert_eq!(col.get(0, 0), 3.0);
        assert_eq!(col.get(1, 0), -2.0);
    }

    #[test]
    fn add_scaled_cases() {
        let a = tridiag(5);
        assert_eq!(a.add_scaled(&SparseMatrix::identity(5), 1.0, 0.0).unwrap().to_dense(), a.to_dense());
        let zero = a.add_scaled(&a, 1.0, -1.0).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        let d = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let sum = a.add_scaled(&d, 2.0, 3.0).unwrap();
        let (ad, dd) = (a.to_dense(), d.to_dense());
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(sum.get(i, j), 2.0 * ad[(i, j)] + 3.0 * dd[(i, j)]);
            }
        }
        assert!(a.add_scaled(&SparseMatrix::identity(4), 1.0, 1.0).is_err());
    }

    #[test]
    fn triple_diag_cases() {
        let id = SparseMatrix::identity(2);
        assert_eq!(id.triple_diag(&[1.0, 1.0]).unwrap().to_dense(), DenseMatrix::identity(2));
        assert_eq!(
            id.triple_diag(&[2.0, 3.0]).unwrap().to_dense(),
            DenseMatrix::from_diagonal(&[2.0, 3.0])
        );
        assert!(id.triple_diag(&[1.0, 0.0]).is_err());
        assert!(id.triple_diag(&[1.0]).is_err());
    }

    #[test]
    fn asymmetry_of_symmetric_matrix_is_zero() {
        assert_eq!(tridiag(6).max_asymmetry(), 0.0);
    }
}
