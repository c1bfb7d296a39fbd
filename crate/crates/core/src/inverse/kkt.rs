use std::ops::Range;

use super::ProblemOperators;
use crate::krylov::LinearOperator;
use crate::linalg::{DenseMatrix, Ldlt, SparseMatrix};
use crate::{norm2, Error, Result};

/// Largest KKT dimension solved by dense factorization.
pub const DENSE_REFERENCE_LIMIT: usize = 6000;

/// The discrete KKT system of source inversion, ordered `(q, u, η)`:
///
/// ```text
/// [ αR*R    0    −W ] [q]   [  0  ]
/// [  0     BᵀB   Aᵀ ] [u] = [ Bᵀy ]
/// [ −W      A    0  ] [η]   [  0  ]
/// ```
#[derive(Debug, Clone)]
pub struct KktSystem {
    /// `αR*R`.
    pub regularization_block: SparseMatrix,
    /// `BᵀB`.
    pub observation_block: SparseMatrix,
    /// `A`.
    pub forward: SparseMatrix,
    forward_t: SparseMatrix,
    /// `W`.
    pub mass: SparseMatrix,
    pub lumped_mass: Vec<f64>,
    pub alpha: f64,
    pub rhs: Vec<f64>,
}

impl KktSystem {
    pub fn build(ops: &ProblemOperators, alpha: f64, data: &[f64]) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if data.len() != ops.n_obs() {
            return Err(Error::DimensionMismatch(format!(
                "{} data values for {} observations",
                data.len(),
                ops.n_obs()
            )));
        }
        let n = ops.n();
        let bt = ops.observation.transpose();
        let observation_block = ops.observation.triple_diag(&vec![1.0; ops.n_obs()])?;
        let mut rhs = vec![0.0; 3 * n];
        bt.spmv_into(data, &mut rhs[n..2 * n])?;
        Ok(KktSystem {
            regularization_block: ops.regularization.scaled(alpha),
            observation_block,
            forward_t: ops.forward.transpose(),
            forward: ops.forward.clone(),
            mass: ops.mass.clone(),
            lumped_mass: ops.lumped_mass.clone(),
            alpha,
            rhs,
        })
    }

    /// Parameter and state dimension.
    pub fn n(&self) -> usize {
        self.mass.nrows()
    }

    pub fn dim(&self) -> usize {
        3 * self.n()
    }

    pub fn parameter_range(&self) -> Range<usize> {
        0..self.n()
    }

    pub fn forward_transpose(&self) -> &SparseMatrix {
        &self.forward_t
    }

    /// Applies the KKT operator blockwise.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        LinearOperator::apply(self, z, &mut out)?;
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n();
        let mut k = DenseMatrix::zeros(3 * n, 3 * n);
        let mut put = |r0: usize, c0: usize, m: &SparseMatrix, s: f64| {
            for i in 0..m.nrows() {
                for (j, v) in m.row(i) {
                    k[(r0 + i, c0 + j)] += s * v;
                }
            }
        };
        put(0, 0, &self.regularization_block, 1.0);
        put(0, 2 * n, &self.mass, -1.0);
        put(n, n, &self.observation_block, 1.0);
        put(n, 2 * n, &self.forward_t, 1.0);
        put(2 * n, 0, &self.mass, -1.0);
        put(2 * n, n, &self.forward, 1.0);
        k
    }
}

impl LinearOperator for KktSystem {
    fn nrows(&self) -> usize {
        self.dim()
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n();
        if z.len() != 3 * n || out.len() != 3 * n {
            return Err(Error::DimensionMismatch(format!(
                "KKT operator of dimension {} applied to length {} into length {}",
                3 * n,
                z.len(),
                out.len()
            )));
        }
        let (q, rest) = z.split_at(n);
        let (u, eta) = rest.split_at(n);
        let (o1, rest) = out.split_at_mut(n);
        let (o2, o3) = rest.split_at_mut(n);
        let mut tmp = vec![0.0; n];

        self.regularization_block.spmv_into(q, o1)?;
        self.mass.spmv_into(eta, &mut tmp)?;
        o1.iter_mut().zip(&tmp).for_each(|(o, t)| *o -= t);

        self.observation_block.spmv_into(u, o2)?;
        self.forward_t.spmv_into(eta, &mut tmp)?;
        o2.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);

        self.forward.spmv_into(u, o3)?;
        self.mass.spmv_into(q, &mut tmp)?;
        o3.iter_mut().zip(&tmp).for_each(|(o, t)| *o -= t);
        Ok(())
    }
}

/// Full KKT solution by dense symmetric-indefinite factorization, checked
/// to a residual of `1e-10·‖rhs‖`.
pub fn reference_solution(sys: &KktSystem) -> Result<Vec<f64>> {
    let dim = sys.dim();
    if norm2(&sys.rhs) == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    if dim > DENSE_REFERENCE_LIMIT {
        return Err(Error::TooLarge {
            dim,
            limit: DENSE_REFERENCE_LIMIT,
        });
    }
    let k = sys.to_dense();
    let factor = Ldlt::factor(&k).map_err(|e| e.context("KKT factorization"))?;
    let mut x = factor.solve(&sys.rhs)?;
    // One step of iterative refinement against the sparse operator.
    let r: Vec<f64> = sys.rhs.iter().zip(sys.apply(&x)?).map(|(b, kx)| b - kx).collect();
    let dx = factor.solve(&r)?;
    x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    let residual: Vec<f64> = sys.rhs.iter().zip(sys.apply(&x)?).map(|(b, kx)| b - kx).collect();
    let rel = norm2(&residual) / norm2(&sys.rhs);
    if rel > 1e-10 {
        return Err(Error::MaxIterations {
            iterations: 1,
            achieved: rel,
            tol: 1e-10,
        }
        .context("dense KKT reference solve"));
    }
    Ok(x)
}
