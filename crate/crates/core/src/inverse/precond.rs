use std::fmt;
use std::str::FromStr;

use super::{exact_solver, KktSystem, EXACT_SOLVE_TOL};
use crate::krylov::{JacobiCg, LinearOperator};
use crate::linalg::{Cholesky, DenseMatrix, SparseMatrix};
use crate::{Error, Result};

/// Default inner tolerance of [`PreconditionerKind::BdalLumpedInexact`].
pub const DEFAULT_INEXACT_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    /// Consistent mass throughout; block 2 applied implicitly.
    BdalExact,
    /// Lumped mass, all blocks solved to `1e-12`.
    BdalLumpedExact,
    /// Lumped mass, blocks 1 and 2 solved only to a loose inner tolerance.
    BdalLumpedInexact,
    /// `αR*R` alone, for CG on the reduced Hessian.
    ReducedRegularization,
}

impl PreconditionerKind {
    pub const ALL: [PreconditionerKind; 4] = [
        PreconditionerKind::BdalExact,
        PreconditionerKind::BdalLumpedExact,
        PreconditionerKind::BdalLumpedInexact,
        PreconditionerKind::ReducedRegularization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PreconditionerKind::BdalExact => "bdal-exact",
            PreconditionerKind::BdalLumpedExact => "bdal-lumped-exact",
            PreconditionerKind::BdalLumpedInexact => "bdal-lumped-inexact",
            PreconditionerKind::ReducedRegularization => "reduced-regularization",
        }
    }

    pub fn is_bdal(self) -> bool {
        self != PreconditionerKind::ReducedRegularization
    }

    pub fn is_lumped(self) -> bool {
        matches!(
            self,
            PreconditionerKind::BdalLumpedExact | PreconditionerKind::BdalLumpedInexact
        )
    }
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PreconditionerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown preconditioner kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PreconditionerSettings {
    /// Augmented-Lagrangian penalty; `None` selects `√α`.
    pub rho: Option<f64>,
    /// Inner tolerance for the inexact kind.
    pub inner_tol: f64,
}

impl Default for PreconditionerSettings {
    fn default() -> Self {
        PreconditionerSettings {
            rho: None,
            inner_tol: DEFAULT_INEXACT_TOL,
        }
    }
}

/// Exact block solves stop on backward error, inexact ones on the plain
/// relative residual.
fn block_solver(m: &SparseMatrix, tol: f64) -> Result<JacobiCg<SparseMatrix>> {
    if tol <= EXACT_SOLVE_TOL {
        exact_solver(m)
    } else {
        JacobiCg::new(m.clone(), &m.diagonal(), tol)
    }
}

/// `BᵀB + ρAᵀW⁻¹A` applied with an inner mass solve.
struct ImplicitSecondBlock {
    observation_block: SparseMatrix,
    forward: SparseMatrix,
    forward_t: SparseMatrix,
    mass_solver: JacobiCg<SparseMatrix>,
    rho: f64,
}

impl LinearOperator for ImplicitSecondBlock {
    fn nrows(&self) -> usize {
        self.forward.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let ax = self.forward.spmv(x)?;
        let winv_ax = self.mass_solver.solve(&ax)?;
        self.forward_t.spmv_into(&winv_ax, y)?;
        let btb = self.observation_block.spmv(x)?;
        for (yi, bi) in y.iter_mut().zip(&btb) {
            *yi = bi + self.rho * *yi;
        }
        Ok(())
    }
}

enum SecondBlock {
    Explicit(JacobiCg<SparseMatrix>),
    Implicit(JacobiCg<ImplicitSecondBlock>),
}

enum ThirdBlock {
    Lumped(Vec<f64>),
    Mass(JacobiCg<SparseMatrix>),
}

enum Blocks {
    Bdal {
        first: JacobiCg<SparseMatrix>,
        second: SecondBlock,
        third: ThirdBlock,
    },
    Regularization(JacobiCg<SparseMatrix>),
}

/// Inverse application of a BDAL preconditioner
/// `diag(αR*R + ρW̃, BᵀB + ρAᵀW̃⁻¹A, W̃/ρ)`, with `W̃` the consistent or
/// lumped mass, or of the reduced-Hessian regularization preconditioner
/// `αR*R`.
pub struct Preconditioner {
    kind: PreconditionerKind,
    rho: f64,
    inner_tol: f64,
    n: usize,
    // Assembled operators kept for the dense views used in spectral analysis.
    first_matrix: SparseMatrix,
    second_matrix: Option<SparseMatrix>,
    sys_forward: SparseMatrix,
    sys_observation: SparseMatrix,
    sys_mass: SparseMatrix,
    lumped: Vec<f64>,
    blocks: Blocks,
}

impl Preconditioner {
    pub fn new(sys: &KktSystem, kind: PreconditionerKind, settings: PreconditionerSettings) -> Result<Self> {
        let rho = settings.rho.unwrap_or_else(|| sys.alpha.sqrt());
        if rho.is_nan() || rho <= 0.0 {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        let inner_tol = match kind {
            PreconditionerKind::BdalLumpedInexact => settings.inner_tol,
            _ => EXACT_SOLVE_TOL,
        };
        if !(inner_tol > 0.0 && inner_tol < 1.0) {
            return Err(Error::InvalidArgument(format!("inner tolerance must lie in (0, 1), got {inner_tol}")));
        }
        let n = sys.n();
        let lumped = sys.lumped_mass.clone();
        let mut second_matrix = None;
        let (first_matrix, blocks) = match kind {
            PreconditionerKind::ReducedRegularization => {
                let m = sys.regularization_block.clone();
                let solver = block_solver(&m, inner_tol)?;
                (m, Blocks::Regularization(solver))
            }
            PreconditionerKind::BdalExact => {
                let first = sys.regularization_block.add_scaled(&sys.mass, 1.0, rho)?;
                let mass_solver = || JacobiCg::new(sys.mass.clone(), &sys.mass.diagonal(), EXACT_SOLVE_TOL);
                let implicit = ImplicitSecondBlock {
                    observation_block: sys.observation_block.clone(),
                    forward: sys.forward.clone(),
                    forward_t: sys.forward_transpose().clone(),
                    mass_solver: mass_solver()?,
                    rho,
                };
                // The lumped second block shares the sparsity and scale of the
                // exact one and supplies the Jacobi scaling.
                let scaling = second_block_lumped(sys, rho)?.diagonal();
                let second = JacobiCg::new(implicit, &scaling, inner_tol)?;
                let blocks = Blocks::Bdal {
                    first: block_solver(&first, inner_tol)?,
                    second: SecondBlock::Implicit(second),
                    third: ThirdBlock::Mass(mass_solver()?),
                };
                (first, blocks)
            }
            PreconditionerKind::BdalLumpedExact | PreconditionerKind::BdalLumpedInexact => {
                let first = sys
                    .regularization_block
                    .add_scaled(&SparseMatrix::from_diagonal(&lumped), 1.0, rho)?;
                let second = second_block_lumped(sys, rho)?;
                let blocks = Blocks::Bdal {
                    first: block_solver(&first, inner_tol)?,
                    second: SecondBlock::Explicit(block_solver(&second, inner_tol)?),
                    third: ThirdBlock::Lumped(lumped.clone()),
                };
                second_matrix = Some(second);
                (first, blocks)
            }
        };
        Ok(Preconditioner {
            kind,
            rho,
            inner_tol,
            n,
            first_matrix,
            second_matrix,
            sys_forward: sys.forward.clone(),
            sys_observation: sys.observation_block.clone(),
            sys_mass: sys.mass.clone(),
            lumped,
            blocks,
        })
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn inner_tol(&self) -> f64 {
        self.inner_tol
    }

    /// Total inner CG iterations spent by the block solvers so far.
    pub fn inner_iterations(&self) -> usize {
        match &self.blocks {
            Blocks::Regularization(s) => s.total_iterations(),
            Blocks::Bdal { first, second, third } => {
                let second = match second {
                    SecondBlock::Explicit(s) => s.total_iterations(),
                    SecondBlock::Implicit(s) => s.total_iterations(),
                };
                let third = match third {
                    ThirdBlock::Lumped(_) => 0,
                    ThirdBlock::Mass(s) => s.total_iterations(),
                };
                first.total_iterations() + second + third
            }
        }
    }

    /// Dense diagonal blocks of the preconditioner matrix `P` (one block for
    /// the regularization kind). The inexact kind reports the matrix it
    /// approximates.
    pub fn dense_blocks(&self) -> Result<Vec<DenseMatrix>> {
        let first = self.first_matrix.to_dense();
        if self.kind == PreconditionerKind::ReducedRegularization {
            return Ok(vec![first]);
        }
        let (second, third) = if let Some(second) = &self.second_matrix {
            let third = DenseMatrix::from_diagonal(&self.lumped.iter().map(|w| w / self.rho).collect::<Vec<_>>());
            (second.to_dense(), third)
        } else {
            let w = self.sys_mass.to_dense();
            let chol = Cholesky::factor(&w)?;
            let a = self.sys_forward.to_dense();
            let columns = (0..self.n)
                .map(|j| chol.solve(&a.column(j)))
                .collect::<Result<Vec<_>>>()?;
            let winv_a = DenseMatrix::from_columns(&columns)?;
            let mut second = a
                .transpose()
                .matmul(&winv_a)?
                .add_scaled(&self.sys_observation.to_dense(), self.rho, 1.0)?;
            second.symmetrize();
            (second, w.add_scaled(&w, 1.0 / self.rho, 0.0)?)
        };
        Ok(vec![first, second, third])
    }
}

fn second_block_lumped(sys: &KktSystem, rho: f64) -> Result<SparseMatrix> {
    let winv: Vec<f64> = sys.lumped_mass.iter().map(|w| 1.0 / w).collect();
    let atwa = sys.forward.triple_diag(&winv)?;
    sys.observation_block.add_scaled(&atwa, 1.0, rho)
}

impl LinearOperator for Preconditioner {
    fn nrows(&self) -> usize {
        match self.blocks {
            Blocks::Regularization(_) => self.n,
            Blocks::Bdal { .. } => 3 * self.n,
        }
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) -> Result<()> {
        crate::krylov::check_operator_dims(self, r, out)?;
        let n = self.n;
        match &self.blocks {
            Blocks::Regularization(solver) => {
                out.copy_from_slice(&solver.solve(r).map_err(|e| e.context("regularization solve"))?);
            }
            Blocks::Bdal { first, second, third } => {
                let x1 = first.solve(&r[..n]).map_err(|e| e.context("BDAL block 1 solve"))?;
                let x2 = match second {
                    SecondBlock::Explicit(s) => s.solve(&r[n..2 * n]),
                    SecondBlock::Implicit(s) => s.solve(&r[n..2 * n]),
                }
                .map_err(|e| e.context("BDAL block 2 solve"))?;
                out[..n].copy_from_slice(&x1);
                out[n..2 * n].copy_from_slice(&x2);
                match third {
                    ThirdBlock::Lumped(w) => {
                        for ((o, ri), wi) in out[2 * n..].iter_mut().zip(&r[2 * n..]).zip(w) {
                            *o = self.rho * ri / wi;
                        }
                    }
                    ThirdBlock::Mass(s) => {
                        let x3 = s.solve(&r[2 * n..]).map_err(|e| e.context("BDAL block 3 solve"))?;
                        for (o, xi) in out[2 * n..].iter_mut().zip(&x3) {
                            *o = self.rho * xi;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// `P⁻¹ r` for a BDAL preconditioner.
pub fn bdal_apply_inverse(p: &Preconditioner, r: &[f64]) -> Result<Vec<f64>> {
    if !p.kind().is_bdal() {
        return Err(Error::InvalidArgument(format!("{} is not a BDAL preconditioner", p.kind())));
    }
    p.apply_new(r)
}
