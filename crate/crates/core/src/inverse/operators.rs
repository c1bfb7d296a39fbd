use crate::fem::{
    assemble_mass, assemble_observation, assemble_regularization, assemble_stiffness_nitsche, lump_mass, TriMesh,
    DEFAULT_NITSCHE_PENALTY, DEFAULT_REGULARIZATION_SHIFT,
};
use crate::krylov::JacobiCg;
use crate::linalg::SparseMatrix;
use crate::{Error, Result};

/// Tolerance of the forward and adjoint solves treated as exact.
pub const EXACT_SOLVE_TOL: f64 = 1e-12;

/// Jacobi CG for an SPD matrix solved to backward error [`EXACT_SOLVE_TOL`].
pub fn exact_solver(m: &SparseMatrix) -> Result<JacobiCg<SparseMatrix>> {
    Ok(JacobiCg::new(m.clone(), &m.diagonal(), EXACT_SOLVE_TOL)?.with_backward_error(m.norm_inf()))
}

/// Assembled finite-element operators of the Poisson source-inversion
/// problem on one mesh with one observation set.
#[derive(Debug, Clone)]
pub struct ProblemOperators {
    /// Nitsche stiffness `A`.
    pub forward: SparseMatrix,
    /// Consistent mass matrix `W`.
    pub mass: SparseMatrix,
    /// Row-sum lumped mass `W_L`.
    pub lumped_mass: Vec<f64>,
    /// Regularization `R*R = Δ_N + tI`, without the factor `α`.
    pub regularization: SparseMatrix,
    /// Pointwise observation operator `B`.
    pub observation: SparseMatrix,
}

impl ProblemOperators {
    pub fn assemble(mesh: &TriMesh, points: &[[f64; 2]]) -> Result<Self> {
        Self::assemble_with(mesh, points, DEFAULT_NITSCHE_PENALTY, DEFAULT_REGULARIZATION_SHIFT)
    }

    pub fn assemble_with(mesh: &TriMesh, points: &[[f64; 2]], penalty: f64, shift: f64) -> Result<Self> {
        let mass = assemble_mass(mesh);
        let lumped_mass = lump_mass(&mass)?;
        Ok(ProblemOperators {
            forward: assemble_stiffness_nitsche(mesh, penalty)?,
            mass,
            lumped_mass,
            regularization: assemble_regularization(mesh, shift)?,
            observation: assemble_observation(mesh, points)?,
        })
    }

    /// Number of mesh vertices; parameter and state share this dimension.
    pub fn n(&self) -> usize {
        self.mass.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.observation.nrows()
    }

    /// Noise-free data `y = J q = B A⁻¹ W q`.
    pub fn synthesize_data(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "parameter of length {} for {} vertices",
                q.len(),
                self.n()
            )));
        }
        let wq = self.mass.spmv(q)?;
        let u = exact_solver(&self.forward)?.solve(&wq).map_err(|e| e.context("forward solve"))?;
        self.observation.spmv(&u)
    }
}
