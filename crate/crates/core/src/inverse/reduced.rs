use super::{KktSystem, EXACT_SOLVE_TOL};
use crate::krylov::{JacobiCg, LinearOperator};
use crate::linalg::SparseMatrix;
use crate::{Error, Result};

/// Reduced Hessian `H = JᵀJ + αR*R` of source inversion with
/// `J = B A⁻¹ W`, applied matrix-free with inner forward and adjoint solves.
pub struct ReducedHessianOperator {
    mass: SparseMatrix,
    observation_block: SparseMatrix,
    regularization_block: SparseMatrix,
    forward_solver: JacobiCg<SparseMatrix>,
    adjoint_solver: JacobiCg<SparseMatrix>,
    regularization_solver: JacobiCg<SparseMatrix>,
    alpha: f64,
}

impl ReducedHessianOperator {
    pub fn new(sys: &KktSystem) -> Result<Self> {
        Self::with_tol(sys, EXACT_SOLVE_TOL)
    }

    /// `tol` applies to the forward, adjoint and regularization solves.
    pub fn with_tol(sys: &KktSystem, tol: f64) -> Result<Self> {
        let solver = |m: &SparseMatrix| -> Result<JacobiCg<SparseMatrix>> {
            Ok(JacobiCg::new(m.clone(), &m.diagonal(), tol)?.with_backward_error(m.norm_inf()))
        };
        Ok(ReducedHessianOperator {
            mass: sys.mass.clone(),
            observation_block: sys.observation_block.clone(),
            forward_solver: solver(&sys.forward)?,
            adjoint_solver: solver(sys.forward_transpose())?,
            regularization_solver: solver(&sys.regularization_block)?,
            regularization_block: sys.regularization_block.clone(),
            alpha: sys.alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Reduced right-hand side `Jᵀy = W A⁻ᵀ (Bᵀy)`, read off the state
    /// block of the KKT right-hand side.
    pub fn rhs(&self, sys: &KktSystem) -> Result<Vec<f64>> {
        let n = sys.n();
        let w = self
            .adjoint_solver
            .solve(&sys.rhs[n..2 * n])
            .map_err(|e| e.context("adjoint solve"))?;
        self.mass.spmv(&w)
    }

    /// Solves `αR*R x = r`, the regularization preconditioner.
    pub fn regularization_prec_apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.regularization_solver
            .solve(r)
            .map_err(|e| e.context("regularization solve"))
    }

    /// The regularization preconditioner as an operator.
    pub fn regularization_preconditioner(&self) -> RegularizationPreconditioner<'_> {
        RegularizationPreconditioner(self)
    }
}

impl LinearOperator for ReducedHessianOperator {
    fn nrows(&self) -> usize {
        self.mass.nrows()
    }

    fn apply(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        crate::krylov::check_operator_dims(self, q, out)?;
        let wq = self.mass.spmv(q)?;
        let u = self.forward_solver.solve(&wq).map_err(|e| e.context("forward solve"))?;
        let btbu = self.observation_block.spmv(&u)?;
        let w = self.adjoint_solver.solve(&btbu).map_err(|e| e.context("adjoint solve"))?;
        self.mass.spmv_into(&w, out)?;
        let rq = self.regularization_block.spmv(q)?;
        for (o, r) in out.iter_mut().zip(&rq) {
            *o += r;
        }
        Ok(())
    }
}

/// `(αR*R)⁻¹` borrowed from a [`ReducedHessianOperator`].
pub struct RegularizationPreconditioner<'a>(&'a ReducedHessianOperator);

impl LinearOperator for RegularizationPreconditioner<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) -> Result<()> {
        crate::krylov::check_operator_dims(self, r, out)?;
        out.copy_from_slice(&self.0.regularization_prec_apply(r)?);
        Ok(())
    }
}

/// `Hq` for the reduced Hessian.
pub fn reduced_hessian_apply(h: &ReducedHessianOperator, q: &[f64]) -> Result<Vec<f64>> {
    if q.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "parameter of length {} for dimension {}",
            q.len(),
            h.nrows()
        )));
    }
    h.apply_new(q)
}
