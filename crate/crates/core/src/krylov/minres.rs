use super::{check_square, History, LinearOperator, SolveOptions, SolveReport, BREAKDOWN_TOLERANCE};
use crate::{axpy, dot, norm2, Error, Result};

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator.
///
/// `prec` applies the inverse of an SPD preconditioner. The reported
/// residual is the preconditioned residual norm `‖r‖_{M⁻¹}` that the
/// Lanczos recurrence delivers for free; the initial guess is zero.
pub fn minres<O, P>(op: &O, prec: &P, b: &[f64], options: &SolveOptions<'_>) -> Result<SolveReport>
where
    O: LinearOperator + ?Sized,
    P: LinearOperator + ?Sized,
{
    check_square(op, prec, b)?;
    let n = b.len();
    let bnorm = norm2(b);

    let mut v_prev = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = prec.apply_new(&v)?;
    let mut gamma = lanczos_norm(&z, &v)?;
    let mut history = History::new(options, n, gamma);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 || gamma == 0.0 {
        return Ok(history.finish(x, true));
    }

    let target = options.tol * gamma;
    let breakdown_level = BREAKDOWN_TOLERANCE * bnorm;
    let mut gamma_prev = 1.0;
    let mut eta = gamma;
    let (mut c_prev, mut c) = (1.0, 1.0);
    let (mut s_prev, mut s) = (0.0, 0.0);
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut az = vec![0.0; n];

    for k in 1..=options.maxit {
        for zi in &mut z {
            *zi /= gamma;
        }
        op.apply(&z, &mut az)?;
        let delta = dot(&az, &z);

        // v_{k+1} = A z_k − (δ/γ_k) v_k − (γ_k/γ_{k−1}) v_{k−1}
        let mut v_next = az.clone();
        axpy(-delta / gamma, &v, &mut v_next);
        axpy(-gamma / gamma_prev, &v_prev, &mut v_next);
        let z_next = prec.apply_new(&v_next)?;
        let gamma_next = lanczos_norm(&z_next, &v_next)?;

        let a0 = c * delta - c_prev * s * gamma;
        let a1 = a0.hypot(gamma_next);
        let a2 = s * delta + c_prev * c * gamma;
        let a3 = s_prev * gamma;
        let c_next = a0 / a1;
        let s_next = gamma_next / a1;

        let mut w_next = z.clone();
        axpy(-a3, &w_prev, &mut w_next);
        axpy(-a2, &w, &mut w_next);
        for wi in &mut w_next {
            *wi /= a1;
        }
        axpy(c_next * eta, &w_next, &mut x);
        eta *= -s_next;

        let residual = eta.abs();
        let hit_error_target = history.record(k, residual, &x);
        if residual <= target || hit_error_target {
            return Ok(history.finish(x, residual <= target));
        }
        if gamma_next <= breakdown_level {
            history.report.breakdown = true;
            return Ok(history.finish(x, false));
        }

        v_prev = std::mem::replace(&mut v, v_next);
        z = z_next;
        w_prev = std::mem::replace(&mut w, w_next);
        gamma_prev = gamma;
        gamma = gamma_next;
        c_prev = c;
        c = c_next;
        s_prev = s;
        s = s_next;
    }
    Ok(history.finish(x, false))
}

/// `sqrt(zᵀv)` with `z = M⁻¹v`; a clearly negative value means the
/// preconditioner is not positive definite.
fn lanczos_norm(z: &[f64], v: &[f64]) -> Result<f64> {
    let zv = dot(z, v);
    let scale = norm2(z) * norm2(v);
    if zv < -1e-12 * scale {
        return Err(Error::Indefinite(zv));
    }
    Ok(zv.max(0.0).sqrt())
}
