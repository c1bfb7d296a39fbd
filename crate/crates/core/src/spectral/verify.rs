use std::f64::consts::SQRT_2;

use super::{cond_bound, AmGmConstants};
use crate::inverse::{KktSystem, Preconditioner, PreconditionerKind};
use crate::krylov::LinearOperator;
use crate::linalg::{symmetric_eig, symmetric_eigenvalues, DenseMatrix};
use crate::{Error, Result};

/// Largest KKT dimension handled by the dense analysis.
pub const DENSE_VERIFICATION_LIMIT: usize = 3000;

/// Slack granted to each bound of the conditioning theory.
pub const THEORY_SLACK: f64 = 1e-8;

const E_SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Measured spectra of the preconditioned KKT operator `E = P^{-1/2}KP^{-1/2}`
/// together with the damped-projector constants and the bounds they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub sigma_min_e: f64,
    pub sigma_max_e: f64,
    pub cond_e: f64,
    /// `½λ_min(Q_R + Q_J)`.
    pub delta: f64,
    /// `λ_max(Q_R Q_J)^{1/2}`.
    pub beta: f64,
    /// `(2 + 2√2)/((1 − β)δ)`; infinite when `β ≥ 1`.
    pub bound_cond: f64,
    /// `(1 − β)δ/(1 + √2)`.
    pub bound_sigma_min: f64,
    pub sigma_min_y: f64,
    /// `λ_min(X + YᵀY)`.
    pub lambda_min_augmented: f64,
    /// Largest mismatch between `(λ − 1)²` over the eigenvalues `λ` of
    /// `X + YᵀY` and the spectrum of `GᵀFFᵀG`, paired in sorted order.
    pub augmented_spectrum_defect: f64,
    /// Smallest and largest eigenvalues of `Q_R`.
    pub q_r_range: (f64, f64),
    /// Smallest and largest eigenvalues of `Q_J`.
    pub q_j_range: (f64, f64),
}

impl ConditionReport {
    pub fn constants(&self) -> AmGmConstants {
        AmGmConstants {
            delta: self.delta,
            beta: self.beta,
        }
    }

    /// One message per bound that fails by more than [`THEORY_SLACK`].
    pub fn violations(&self) -> Vec<String> {
        let s = THEORY_SLACK;
        let mut out = Vec::new();
        if self.sigma_max_e > 2.0 + s {
            out.push(format!("sigma_max(E) = {:.12e} exceeds 2", self.sigma_max_e));
        }
        if self.sigma_min_e < self.bound_sigma_min - s {
            out.push(format!(
                "sigma_min(E) = {:.12e} is below (1-beta)delta/(1+sqrt 2) = {:.12e}",
                self.sigma_min_e, self.bound_sigma_min
            ));
        }
        if self.cond_e > self.bound_cond * (1.0 + s) {
            out.push(format!(
                "cond(E) = {:.12e} exceeds (2+2 sqrt 2)/((1-beta)delta) = {:.12e}",
                self.cond_e, self.bound_cond
            ));
        }
        if self.sigma_min_y < (2.0 * self.delta).sqrt() - s {
            out.push(format!(
                "sigma_min(Y) = {:.12e} is below sqrt(2 delta) = {:.12e}",
                self.sigma_min_y,
                (2.0 * self.delta).sqrt()
            ));
        }
        if self.lambda_min_augmented < 1.0 - self.beta - s {
            out.push(format!(
                "lambda_min(X + Y^T Y) = {:.12e} is below 1 - beta = {:.12e}",
                self.lambda_min_augmented,
                1.0 - self.beta
            ));
        }
        if self.augmented_spectrum_defect > s {
            out.push(format!(
                "(lambda - 1)^2 departs from spec(G^T F F^T G) by {:.3e}",
                self.augmented_spectrum_defect
            ));
        }
        for (name, (lo, hi)) in [("Q_R", self.q_r_range), ("Q_J", self.q_j_range)] {
            if lo < -s || hi > 1.0 + s {
                out.push(format!("{name} spectrum [{lo:.12e}, {hi:.12e}] leaves [0, 1]"));
            }
        }
        if !(self.delta > 0.0) {
            out.push(format!("delta = {:.12e} is not positive", self.delta));
        }
        if !(self.beta < 1.0) {
            out.push(format!("beta = {:.12e} is not below 1", self.beta));
        }
        out
    }
}

/// Dense `E = P^{-1/2}KP^{-1/2}` for a BDAL preconditioner whose blocks are
/// applied exactly.
pub fn build_preconditioned_e(sys: &KktSystem, p: &Preconditioner) -> Result<DenseMatrix> {
    Ok(preconditioned_blocks(sys, p)?.assemble())
}

struct PreconditionedBlocks {
    e11: DenseMatrix,
    e22: DenseMatrix,
    /// `E₃₁`, equal to `F` of the theory when the mass is not lumped.
    f: DenseMatrix,
    /// `E₃₂`, equal to `G`.
    g: DenseMatrix,
}

impl PreconditionedBlocks {
    fn assemble(&self) -> DenseMatrix {
        let n = self.f.nrows();
        let mut e = DenseMatrix::zeros(3 * n, 3 * n);
        e.set_block(0, 0, &self.e11);
        e.set_block(n, n, &self.e22);
        e.set_block(2 * n, 0, &self.f);
        e.set_block(0, 2 * n, &self.f.transpose());
        e.set_block(2 * n, n, &self.g);
        e.set_block(n, 2 * n, &self.g.transpose());
        e
    }
}

fn preconditioned_blocks(sys: &KktSystem, p: &Preconditioner) -> Result<PreconditionedBlocks> {
    match p.kind() {
        PreconditionerKind::BdalExact | PreconditionerKind::BdalLumpedExact => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "dense analysis needs a BDAL preconditioner with exact block solves, got {other}"
            )))
        }
    }
    let n = sys.n();
    if p.nrows() != 3 * n {
        return Err(Error::DimensionMismatch(format!(
            "preconditioner of dimension {} for a KKT system of dimension {}",
            p.nrows(),
            3 * n
        )));
    }
    if 3 * n > DENSE_VERIFICATION_LIMIT {
        return Err(Error::TooLarge {
            dim: 3 * n,
            limit: DENSE_VERIFICATION_LIMIT,
        });
    }
    let blocks = p.dense_blocks()?;
    let inv_sqrt = blocks
        .iter()
        .map(inverse_sqrt)
        .collect::<Result<Vec<_>>>()?;
    let (s1, s2, s3) = (&inv_sqrt[0], &inv_sqrt[1], &inv_sqrt[2]);
    let sandwich = |left: &DenseMatrix, k: &DenseMatrix, right: &DenseMatrix| left.matmul(k)?.matmul(right);
    let mut e11 = sandwich(s1, &sys.regularization_block.to_dense(), s1)?;
    let mut e22 = sandwich(s2, &sys.observation_block.to_dense(), s2)?;
    let f = sandwich(s3, &sys.mass.scaled(-1.0).to_dense(), s1)?;
    let g = sandwich(s3, &sys.forward.to_dense(), s2)?;
    for block in [&mut e11, &mut e22] {
        let defect = block.symmetry_defect();
        if defect > E_SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(defect));
        }
        block.symmetrize();
    }
    Ok(PreconditionedBlocks { e11, e22, f, g })
}

pub(super) fn inverse_sqrt(m: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = symmetric_eig(m)?;
    if let Some(k) = eig.eigenvalues.iter().position(|&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            row: k,
            pivot: eig.eigenvalues[k],
        });
    }
    Ok(eig.apply_function(|l| 1.0 / l.sqrt()))
}

/// Measures every quantity of the conditioning theory densely, without
/// judging the bounds.
pub fn analyze_bounds(sys: &KktSystem, p: &Preconditioner) -> Result<ConditionReport> {
    if p.kind() != PreconditionerKind::BdalExact {
        return Err(Error::InvalidArgument(format!(
            "the conditioning theory describes the unlumped preconditioner, got {}",
            p.kind()
        )));
    }
    let parts = preconditioned_blocks(sys, p)?;
    let n = sys.n();
    let spectrum_e = symmetric_eigenvalues(&parts.assemble())?;
    let PreconditionedBlocks { e11, e22, f, g } = parts;

    let sigma_max_e = spectrum_e.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let sigma_min_e = spectrum_e.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);

    let gram = |m: &DenseMatrix| -> Result<DenseMatrix> {
        let mut out = m.matmul(&m.transpose())?;
        out.symmetrize();
        Ok(out)
    };
    let q_r = gram(&f)?;
    let q_j = gram(&g)?;
    let q_r_spec = symmetric_eigenvalues(&q_r)?;
    let q_j_spec = symmetric_eigenvalues(&q_j)?;
    let yyt = q_r.add_scaled(&q_j, 1.0, 1.0)?;
    let lambda_min_yyt = symmetric_eigenvalues(&yyt)?[0];
    let delta = 0.5 * lambda_min_yyt;
    let sigma_min_y = lambda_min_yyt.max(0.0).sqrt();

    let mut gt_qr_g = g.transpose().matmul(&q_r)?.matmul(&g)?;
    gt_qr_g.symmetrize();
    let mut mu = symmetric_eigenvalues(&gt_qr_g)?;
    let beta = mu.last().copied().unwrap_or(0.0).max(0.0).sqrt();

    let mut augmented = DenseMatrix::zeros(2 * n, 2 * n);
    augmented.set_block(0, 0, &e11);
    augmented.set_block(n, n, &e22);
    let mut y = DenseMatrix::zeros(n, 2 * n);
    y.set_block(0, 0, &f);
    y.set_block(0, n, &g);
    let mut augmented = augmented.add_scaled(&y.transpose().matmul(&y)?, 1.0, 1.0)?;
    augmented.symmetrize();
    let lambdas = symmetric_eigenvalues(&augmented)?;
    let lambda_min_augmented = lambdas[0];
    let mut shifted: Vec<f64> = lambdas.iter().map(|l| (l - 1.0) * (l - 1.0)).collect();
    shifted.sort_by(|a, b| b.total_cmp(a));
    mu.sort_by(|a, b| b.total_cmp(a));
    let augmented_spectrum_defect = shifted
        .iter()
        .enumerate()
        .map(|(i, s)| (s - mu[i / 2]).abs())
        .fold(0.0, f64::max);

    let constants = AmGmConstants { delta, beta };
    let bound_cond = cond_bound(constants).unwrap_or(f64::INFINITY);
    Ok(ConditionReport {
        sigma_min_e,
        sigma_max_e,
        cond_e: sigma_max_e / sigma_min_e,
        delta,
        beta,
        bound_cond,
        bound_sigma_min: (1.0 - beta) * delta / (1.0 + SQRT_2),
        sigma_min_y,
        lambda_min_augmented,
        augmented_spectrum_defect,
        q_r_range: (q_r_spec[0], q_r_spec[n - 1]),
        q_j_range: (q_j_spec[0], q_j_spec[n - 1]),
    })
}

/// [`analyze_bounds`] followed by a check of every bound, failing with
/// [`Error::TheoryViolation`] when any is exceeded beyond [`THEORY_SLACK`].
pub fn verify_bounds(sys: &KktSystem, p: &Preconditioner) -> Result<ConditionReport> {
    let report = analyze_bounds(sys, p)?;
    let violations = report.violations();
    if violations.is_empty() {
        Ok(report)
    } else {
        Err(Error::TheoryViolation(violations.join("; ")))
    }
}
