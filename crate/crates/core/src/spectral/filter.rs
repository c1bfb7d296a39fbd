use crate::{Error, Result};

/// Relative slack, in units of machine epsilon, granted when checking the
/// appropriate-regularization constants against the per-mode sequences.
const ASSUMPTION_ULPS: f64 = 4.0;

/// Singular values of the parameter-to-observable map `J` and of a spectral
/// filtering regularization `R` that shares its right singular vectors.
///
/// Coefficients are indexed by the shared basis; `d` is descending and
/// zero-padded where `J` has fewer singular values than parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilterModel {
    d: Vec<f64>,
    r: Vec<f64>,
    alpha: f64,
    rho: f64,
}

impl SpectralFilterModel {
    pub fn new(d: Vec<f64>, r: Vec<f64>, alpha: f64, rho: f64) -> Result<Self> {
        if d.len() != r.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} singular values of J and {} of R",
                d.len(),
                r.len()
            )));
        }
        if d.is_empty() {
            return Err(Error::InvalidArgument("empty spectral model".into()));
        }
        if let Some(k) = d.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("d[{k}] = {} is not a finite nonnegative value", d[k])));
        }
        if let Some(k) = r.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("r[{k}] = {} is not a finite nonnegative value", r[k])));
        }
        if let Some(k) = d.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(format!("d is not descending at index {}", k + 1)));
        }
        for (name, v) in [("alpha", alpha), ("rho", rho)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SpectralFilterModel { d, r, alpha, rho })
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Same sequences with a different regularization weight and penalty.
    pub fn with_parameters(&self, alpha: f64, rho: f64) -> Result<Self> {
        SpectralFilterModel::new(self.d.clone(), self.r.clone(), alpha, rho)
    }

    /// `min_k (d_k² + αr_k²)`, the tightest under-regularization constant.
    pub fn tightest_under_constant(&self) -> f64 {
        self.d
            .iter()
            .zip(&self.r)
            .map(|(d, r)| d * d + self.alpha * r * r)
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_k d_k r_k`, the tightest over-regularization constant.
    pub fn tightest_over_constant(&self) -> f64 {
        self.d.iter().zip(&self.r).map(|(d, r)| d * r).fold(0.0, f64::max)
    }
}

/// Constants `δ`, `β` bounding the arithmetic and geometric means of the
/// damped projectors `Q_R` and `Q_J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmGmConstants {
    pub delta: f64,
    pub beta: f64,
}

/// `δ = ½(1 + αc_o²/ρ²)⁻¹` and `β = (1 + c_u/ρ)^{-1/2}` for a model that is
/// neither under-regularized (`d_k² + αr_k² ≥ c_u`) nor over-regularized
/// (`d_k r_k ≤ c_o`).
pub fn filter_constants(m: &SpectralFilterModel, c_u: f64, c_o: f64) -> Result<AmGmConstants> {
    if !(c_u >= 0.0 && c_o >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "constants must be nonnegative, got c_u = {c_u}, c_o = {c_o}"
        )));
    }
    let slack = 1.0 + ASSUMPTION_ULPS * f64::EPSILON;
    let (k, under) = worst(m.d.iter().zip(&m.r).map(|(d, r)| d * d + m.alpha * r * r), |a, b| a < b);
    if under * slack < c_u {
        return Err(Error::AssumptionViolated {
            k,
            what: format!("d_k² + αr_k² = {under:e} is below c_u = {c_u:e}"),
        });
    }
    let (k, over) = worst(m.d.iter().zip(&m.r).map(|(d, r)| d * r), |a, b| a > b);
    if over > c_o * slack {
        return Err(Error::AssumptionViolated {
            k,
            what: format!("d_k r_k = {over:e} exceeds c_o = {c_o:e}"),
        });
    }
    let (alpha, rho) = (m.alpha, m.rho);
    Ok(AmGmConstants {
        delta: 0.5 / (1.0 + alpha * c_o * c_o / (rho * rho)),
        beta: (1.0 + c_u / rho).powf(-0.5),
    })
}

/// Index and value of the extreme entry under `better`, first occurrence.
fn worst(values: impl Iterator<Item = f64>, better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, f64::NAN);
    for (k, v) in values.enumerate() {
        if k == 0 || better(v, best.1) {
            best = (k, v);
        }
    }
    best
}

/// Exact `δ = ½λ_min(Q_R + Q_J)` and `β = λ_max(Q_R Q_J)^{1/2}` when the
/// projectors share eigenvectors, with per-mode eigenvalues
/// `(αr_k²/ρ + 1)⁻¹` and `(d_k²/ρ + 1)⁻¹`.
pub fn damped_projector_constants_exact(m: &SpectralFilterModel) -> AmGmConstants {
    let mut delta = f64::INFINITY;
    let mut beta: f64 = 0.0;
    for (d, r) in m.d.iter().zip(&m.r) {
        let qr = 1.0 / (m.alpha * r * r / m.rho + 1.0);
        let qj = 1.0 / (d * d / m.rho + 1.0);
        delta = delta.min(0.5 * (qr + qj));
        beta = beta.max((qr * qj).sqrt());
    }
    AmGmConstants { delta, beta }
}

/// `(2 + 2√2) / ((1 − β)δ)`, the bound on the condition number of the
/// symmetrically preconditioned KKT operator.
pub fn cond_bound(c: AmGmConstants) -> Result<f64> {
    if !(c.beta < 1.0 && c.beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("bound undefined for beta = {}", c.beta)));
    }
    if !(c.delta > 0.0) {
        return Err(Error::InvalidArgument(format!("bound undefined for delta = {}", c.delta)));
    }
    Ok((2.0 + 2.0 * std::f64::consts::SQRT_2) / ((1.0 - c.beta) * c.delta))
}

/// Largest singular value of the saddle-point stability matrix
/// `Ψ = [[1/a, (1 + b/a)/c], [(1 + b/a)/c, (b/c²)(1 + b/a)]]`.
pub fn psi_sigma_max(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "a, b, c must be positive, got ({a}, {b}, {c})"
        )));
    }
    let (b2, c2) = (b * b, c * c);
    let disc = b2 * b2 + 2.0 * b2 * b * a + b2 * a * a + 2.0 * b2 * c2 + 6.0 * b * a * c2 + 4.0 * a * a * c2 + c2 * c2;
    Ok((b * a + b2 + c2 + disc.sqrt()) / (2.0 * a * c2))
}

/// Per-mode reconstruction errors `(e_noise, e_reg)` with
/// `e_noise_k = −d_k/(d_k² + αr_k²)·ζ_k` and
/// `e_reg_k = αr_k²/(d_k² + αr_k²)·q_k`.
pub fn error_decomposition(
    m: &SpectralFilterModel,
    q_true: &[f64],
    noise: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if q_true.len() != m.len() || noise.len() != m.len() {
        return Err(Error::DimensionMismatch(format!(
            "model of length {} with {} parameter and {} noise coefficients",
            m.len(),
            q_true.len(),
            noise.len()
        )));
    }
    let mut e_noise = Vec::with_capacity(m.len());
    let mut e_reg = Vec::with_capacity(m.len());
    for k in 0..m.len() {
        let (d, r) = (m.d[k], m.r[k]);
        let reg = m.alpha * r * r;
        let denom = d * d + reg;
        if denom == 0.0 {
            return Err(Error::AssumptionViolated {
                k,
                what: "d_k² + αr_k² = 0, the mode is neither observed nor regularized".into(),
            });
        }
        e_noise.push(-d / denom * noise[k]);
        e_reg.push(reg / denom * q_true[k]);
    }
    Ok((e_noise, e_reg))
}

/// Source-inversion model with `d_k = 1/λ_k` for the first `n_obs` modes and
/// zero afterwards, and `r_k = λ_k`.
pub fn model_problem_sequences(
    n_q: usize,
    n_obs: usize,
    lambda: impl Fn(usize) -> f64,
    alpha: f64,
    rho: f64,
) -> Result<SpectralFilterModel> {
    if n_obs > n_q {
        return Err(Error::InvalidArgument(format!("n_obs = {n_obs} exceeds n_q = {n_q}")));
    }
    let lambdas: Vec<f64> = (1..=n_q).map(lambda).collect();
    if let Some(k) = lambdas.iter().position(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!("eigenvalue λ_{} = {} is not positive", k + 1, lambdas[k])));
    }
    if let Some(k) = lambdas.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("eigenvalues not increasing at k = {}", k + 2)));
    }
    let d = lambdas
        .iter()
        .enumerate()
        .map(|(k, l)| if k < n_obs { 1.0 / l } else { 0.0 })
        .collect();
    SpectralFilterModel::new(d, lambdas, alpha, rho)
}
