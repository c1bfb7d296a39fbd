use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::fem::{DEFAULT_NITSCHE_PENALTY, DEFAULT_REGULARIZATION_SHIFT};
use crate::inverse::{PreconditionerKind, DEFAULT_INEXACT_TOL};
use crate::{Error, Result};

/// How the augmented-Lagrangian penalty `ρ` follows `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoPolicy {
    SqrtAlpha,
    Fixed(f64),
}

impl RhoPolicy {
    pub fn rho(self, alpha: f64) -> f64 {
        match self {
            RhoPolicy::SqrtAlpha => alpha.sqrt(),
            RhoPolicy::Fixed(rho) => rho,
        }
    }
}

impl fmt::Display for RhoPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoPolicy::SqrtAlpha => f.write_str("sqrt-alpha"),
            RhoPolicy::Fixed(rho) => write!(f, "{rho:e}"),
        }
    }
}

/// Where the true parameter field comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Synthetic,
    Pgm(PathBuf),
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Synthetic => f.write_str("synthetic"),
            SourceSpec::Pgm(path) => write!(f, "{}", path.display()),
        }
    }
}

/// Parameters of every experiment, read from flat `key = value` text.
///
/// List-valued keys take comma-separated values; meshes are written
/// `NXxNY` in cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub lx: f64,
    pub ly: f64,
    pub meshes: Vec<(usize, usize)>,
    pub alphas: Vec<f64>,
    pub rho: RhoPolicy,
    pub n_obs: Vec<usize>,
    pub seed: u64,
    pub source: SourceSpec,
    pub preconditioners: Vec<PreconditionerKind>,
    /// Include the regularization-preconditioned reduced-Hessian CG run.
    pub cg_hess: bool,
    pub tol: f64,
    pub maxit: usize,
    pub inner_tol: f64,
    /// Relative parameter error whose first crossing is reported.
    pub target_error: f64,
    /// Stop each Krylov run once `target_error` is reached.
    pub stop_at_target: bool,
    /// Iterations whose parameter iterates are written as PGM snapshots.
    pub snapshots: Vec<usize>,
    /// Fill the wall-clock column; off by default so that reruns are
    /// byte-identical.
    pub timing: bool,
    /// Observation file shared by all runs instead of sampled points.
    pub observations: Option<PathBuf>,
    pub nitsche_penalty: f64,
    pub regularization_shift: f64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lx: 1.45,
            ly: 1.0,
            meshes: vec![(29, 20)],
            alphas: vec![1e-6],
            rho: RhoPolicy::SqrtAlpha,
            n_obs: vec![500],
            seed: 1,
            source: SourceSpec::Synthetic,
            preconditioners: vec![PreconditionerKind::BdalLumpedExact],
            cg_hess: true,
            tol: 1e-12,
            maxit: 200,
            inner_tol: DEFAULT_INEXACT_TOL,
            target_error: 1e-5,
            stop_at_target: false,
            snapshots: vec![3, 15, 50],
            timing: false,
            observations: None,
            nitsche_penalty: DEFAULT_NITSCHE_PENALTY,
            regularization_shift: DEFAULT_REGULARIZATION_SHIFT,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Defaults overridden by the pairs in `text`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        let mut seen = BTreeSet::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value, got {line:?}", number + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse(format!("line {}: duplicate key {key:?}", number + 1)));
            }
            config
                .set(key, value.trim())
                .map_err(|e| e.context(format!("line {}", number + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        ExperimentConfig::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    /// Overrides one key; call [`ExperimentConfig::validate`] afterwards.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lx" => self.lx = parse_value(key, value)?,
            "ly" => self.ly = parse_value(key, value)?,
            "mesh" => self.meshes = parse_list(key, value, parse_mesh)?,
            "alpha" => self.alphas = parse_list(key, value, |v| parse_value("alpha", v))?,
            "rho" => {
                self.rho = if value == "sqrt-alpha" {
                    RhoPolicy::SqrtAlpha
                } else {
                    RhoPolicy::Fixed(parse_value(key, value)?)
                }
            }
            "n_obs" => self.n_obs = parse_list(key, value, |v| parse_value("n_obs", v))?,
            "seed" => self.seed = parse_value(key, value)?,
            "source" => {
                self.source = if value == "synthetic" {
                    SourceSpec::Synthetic
                } else {
                    SourceSpec::Pgm(PathBuf::from(value))
                }
            }
            "preconditioners" => self.preconditioners = parse_list(key, value, |v| v.parse())?,
            "cg_hess" => self.cg_hess = parse_bool(key, value)?,
            "tol" => self.tol = parse_value(key, value)?,
            "maxit" => self.maxit = parse_value(key, value)?,
            "inner_tol" => self.inner_tol = parse_value(key, value)?,
            "target_error" => self.target_error = parse_value(key, value)?,
            "stop_at_target" => self.stop_at_target = parse_bool(key, value)?,
            "snapshots" => {
                self.snapshots = if value.is_empty() {
                    Vec::new()
                } else {
                    parse_list(key, value, |v| parse_value("snapshots", v))?
                }
            }
            "timing" => self.timing = parse_bool(key, value)?,
            "observations" => self.observations = (!value.is_empty()).then(|| PathBuf::from(value)),
            "nitsche_penalty" => self.nitsche_penalty = parse_value(key, value)?,
            "regularization_shift" => self.regularization_shift = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return invalid(format!("domain extents must be positive, got {} x {}", self.lx, self.ly));
        }
        if self.meshes.is_empty() || self.alphas.is_empty() || self.n_obs.is_empty() || self.preconditioners.is_empty() {
            return invalid("mesh, alpha, n_obs and preconditioners lists must be nonempty".into());
        }
        if let Some((nx, ny)) = self.meshes.iter().find(|(nx, ny)| *nx == 0 || *ny == 0) {
            return invalid(format!("mesh {nx}x{ny} has no cells"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return invalid(format!("alpha must be positive, got {a}"));
        }
        if let RhoPolicy::Fixed(rho) = self.rho {
            if !(rho > 0.0 && rho.is_finite()) {
                return invalid(format!("rho must be positive, got {rho}"));
            }
        }
        if let Some(kind) = self.preconditioners.iter().find(|k| !k.is_bdal()) {
            return invalid(format!("{kind} is not a KKT preconditioner; use cg_hess for the reduced baseline"));
        }
        if self.n_obs.contains(&0) {
            return invalid("n_obs entries must be at least 1".into());
        }
        for (name, v) in [("tol", self.tol), ("inner_tol", self.inner_tol), ("target_error", self.target_error)] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.maxit == 0 {
            return invalid("maxit must be at least 1".into());
        }
        if !(self.nitsche_penalty > 0.0 && self.regularization_shift > 0.0) {
            return invalid(format!(
                "nitsche_penalty and regularization_shift must be positive, got {} and {}",
                self.nitsche_penalty, self.regularization_shift
            ));
        }
        Ok(())
    }

    /// The configuration as parseable `key = value` lines.
    pub fn echo(&self) -> String {
        let join = |items: Vec<String>| items.join(",");
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("lx", format!("{:e}", self.lx));
        line("ly", format!("{:e}", self.ly));
        line("mesh", join(self.meshes.iter().map(|(x, y)| format!("{x}x{y}")).collect()));
        line("alpha", join(self.alphas.iter().map(|a| format!("{a:e}")).collect()));
        line("rho", self.rho.to_string());
        line("n_obs", join(self.n_obs.iter().map(|n| n.to_string()).collect()));
        line("seed", self.seed.to_string());
        line("source", self.source.to_string());
        line("preconditioners", join(self.preconditioners.iter().map(|k| k.to_string()).collect()));
        line("cg_hess", self.cg_hess.to_string());
        line("tol", format!("{:e}", self.tol));
        line("maxit", self.maxit.to_string());
        line("inner_tol", format!("{:e}", self.inner_tol));
        line("target_error", format!("{:e}", self.target_error));
        line("stop_at_target", self.stop_at_target.to_string());
        line("snapshots", join(self.snapshots.iter().map(|s| s.to_string()).collect()));
        line("timing", self.timing.to_string());
        line(
            "observations",
            self.observations.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        line("nitsche_penalty", format!("{:e}", self.nitsche_penalty));
        line("regularization_shift", format!("{:e}", self.regularization_shift));
        line("out", self.out.display().to_string());
        out
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("invalid boolean {value:?} for {key}"))),
    }
}

fn parse_mesh(value: &str) -> Result<(usize, usize)> {
    let (nx, ny) = value
        .split_once('x')
        .ok_or_else(|| Error::Parse(format!("mesh {value:?} is not of the form NXxNY")))?;
    Ok((parse_value("mesh", nx)?, parse_value("mesh", ny)?))
}

fn parse_list<T>(key: &str, value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if value.is_empty() {
        return Err(Error::Parse(format!("empty list for {key}")));
    }
    value.split(',').map(|v| item(v.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_keys() {
        let c = ExperimentConfig::parse("# nothing but a comment\n\n").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn parses_lists_and_policies() {
        let c = ExperimentConfig::parse(
            "mesh = 10x7, 20x14,40x28\nalpha=1e-2,1e-4 # trailing comment\nrho = 0.5\nn_obs = 50,200\n\
             preconditioners = bdal-exact,bdal-lumped-inexact\nsource = img.pgm\ntiming = true\nsnapshots =\n",
        )
        .unwrap();
        assert_eq!(c.meshes, vec![(10, 7), (20, 14), (40, 28)]);
        assert_eq!(c.alphas, vec![1e-2, 1e-4]);
        assert_eq!(c.rho, RhoPolicy::Fixed(0.5));
        assert_eq!(c.n_obs, vec![50, 200]);
        assert_eq!(
            c.preconditioners,
            vec![PreconditionerKind::BdalExact, PreconditionerKind::BdalLumpedInexact]
        );
        assert_eq!(c.source, SourceSpec::Pgm(PathBuf::from("img.pgm")));
        assert!(c.timing);
        assert!(c.snapshots.is_empty());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = ExperimentConfig::default();
        c.set("mesh", "3x2,6x4").unwrap();
        c.set("alpha", "0.001,1e-7").unwrap();
        c.set("rho", "0.25").unwrap();
        c.set("observations", "obs.txt").unwrap();
        assert_eq!(ExperimentConfig::parse(&c.echo()).unwrap(), c);
        assert_eq!(
            ExperimentConfig::parse(&ExperimentConfig::default().echo()).unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "mesh = 10",
            "mesh = 0x3",
            "alpha = -1",
            "alpha = ",
            "tol = 1.5",
            "unknown = 3",
            "seed = 1\nseed = 2",
            "no equals sign",
            "timing = maybe",
            "n_obs = 0",
            "rho = 0",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn rho_policy() {
        assert_eq!(RhoPolicy::SqrtAlpha.rho(1e-6), 1e-3);
        assert_eq!(RhoPolicy::Fixed(0.3).rho(1e-6), 0.3);
    }
}
