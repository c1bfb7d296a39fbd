use std::path::{Path, PathBuf};

use super::output::{format_float, write_atomic, CsvTable};
use super::{generate_observations, synth_source, ExperimentConfig, SourceSpec, SYNTHETIC_SOURCE_FORMULA};
use crate::fem::{interpolate_image, GrayImage, NodalField, ObservationSet, TriMesh};
use crate::inverse::{
    reference_solution, KktSystem, Preconditioner, PreconditionerKind, PreconditionerSettings, ProblemOperators,
    ReducedHessianOperator,
};
use crate::krylov::{minres, pcg, Reference, SolveOptions, SolveReport};
use crate::spectral::{analyze_bounds, ConditionReport};
use crate::{Error, Result};

/// Column order of every per-iteration CSV.
pub const RUN_CSV_HEADER: [&str; 5] = ["run-id", "iteration", "rel-param-error", "precond-residual", "wall-s"];

/// One Krylov iteration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub iteration: usize,
    /// `‖q_k − q‖/‖q‖` against the factorized KKT reference.
    pub rel_param_error: f64,
    /// Preconditioned residual norm relative to its initial value.
    pub precond_residual: f64,
    pub wall_s: f64,
}

/// Outcome of one solver/preconditioner run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub rows: Vec<IterationRow>,
    /// First iteration whose parameter error is below the configured target.
    pub iterations_to_target: Option<usize>,
    pub converged: bool,
    /// Final parameter iterate; empty when the run failed.
    pub parameter: Vec<f64>,
    /// Solver error, if the run failed.
    pub failure: Option<String>,
}

impl RunRecord {
    fn failed(run_id: String, error: &Error) -> Self {
        RunRecord {
            run_id,
            rows: Vec::new(),
            iterations_to_target: None,
            converged: false,
            parameter: Vec::new(),
            failure: Some(error.to_string()),
        }
    }

    fn from_report(run_id: String, report: &SolveReport, parameter: Vec<f64>, target: f64) -> Self {
        let initial = report.residual_history[0];
        let rows = (0..report.residual_history.len())
            .map(|k| IterationRow {
                iteration: k,
                rel_param_error: report.error_history[k],
                precond_residual: if initial > 0.0 {
                    report.residual_history[k] / initial
                } else {
                    0.0
                },
                wall_s: report.elapsed[k],
            })
            .collect();
        RunRecord {
            run_id,
            rows,
            iterations_to_target: report.iterations_to_error(target),
            converged: report.converged,
            parameter,
            failure: None,
        }
    }

    /// Parameter error after `iteration` Krylov steps, if the run got there.
    pub fn error_at(&self, iteration: usize) -> Option<f64> {
        self.rows.get(iteration).map(|r| r.rel_param_error)
    }
}

fn runs_table(records: &[RunRecord], timing: bool) -> CsvTable {
    let mut table = CsvTable::new(&RUN_CSV_HEADER);
    for record in records {
        for row in &record.rows {
            table.push(&[
                record.run_id.clone(),
                row.iteration.to_string(),
                format_float(row.rel_param_error),
                format_float(row.precond_residual),
                if timing { format_float(row.wall_s) } else { String::new() },
            ]);
        }
    }
    table
}

fn summary_table(records: &[RunRecord]) -> CsvTable {
    let mut table = CsvTable::new(&["run-id", "iterations-to-target", "iterations", "final-rel-param-error", "status"]);
    for record in records {
        let last = record.rows.last();
        table.push(&[
            record.run_id.clone(),
            count_field(record.iterations_to_target),
            last.map(|r| r.iteration.to_string()).unwrap_or_default(),
            last.map(|r| format_float(r.rel_param_error)).unwrap_or_default(),
            match (&record.failure, record.converged) {
                (Some(msg), _) => format!("failed: {}", msg.replace([',', '\n'], ";")),
                (None, true) => "converged".into(),
                (None, false) => "not-converged".into(),
            },
        ]);
    }
    table
}

/// Iteration count, or `-1` when the target was never reached.
fn count_field(count: Option<usize>) -> String {
    count.map_or_else(|| "-1".to_string(), |k| k.to_string())
}

/// Path of the observation file written for `n_obs` points.
pub fn observation_path(config: &ExperimentConfig, n_obs: usize) -> PathBuf {
    config.out.join(format!("observations_n{n_obs}.txt"))
}

/// Observation points for `n_obs`: the configured file when given,
/// otherwise sampled from the seed, written to the output directory and
/// read back so every run uses exactly the stored locations.
pub fn prepare_observations(config: &ExperimentConfig, n_obs: usize) -> Result<ObservationSet> {
    if let Some(path) = &config.observations {
        return ObservationSet::read(path, config.lx, config.ly);
    }
    let path = observation_path(config, n_obs);
    let set = generate_observations(config.seed, n_obs, config.lx, config.ly)?;
    write_atomic(&path, set.to_text().as_bytes())?;
    ObservationSet::read(&path, config.lx, config.ly)
}

/// Nodal values of the configured true source on `mesh`.
pub fn true_source(config: &ExperimentConfig, mesh: &TriMesh) -> Result<Vec<f64>> {
    match &config.source {
        SourceSpec::Synthetic => Ok(synth_source(mesh).into_values()),
        SourceSpec::Pgm(path) => {
            let image = GrayImage::read_pgm(path)?;
            Ok(interpolate_image(mesh, &image, 0.0, 1.0)?.into_values())
        }
    }
}

fn write_source_metadata(config: &ExperimentConfig) -> Result<()> {
    let text = match &config.source {
        SourceSpec::Synthetic => format!(
            "synthetic source on [0, {}] x [0, {}]\n{SYNTHETIC_SOURCE_FORMULA}",
            config.lx, config.ly
        ),
        SourceSpec::Pgm(path) => format!("image {} interpolated to [0, 1]\n", path.display()),
    };
    write_atomic(&config.out.join("source.txt"), text.as_bytes())
}

fn write_field(path: &Path, mesh: &TriMesh, values: &[f64]) -> Result<()> {
    let field = NodalField::new(mesh, values.to_vec())?;
    write_atomic(path, field.to_image().to_pgm_ascii().as_bytes())
}

/// An assembled inversion instance with its factorized reference solution.
pub struct Instance {
    pub mesh: TriMesh,
    pub q_true: Vec<f64>,
    pub system: KktSystem,
    pub reference: Vec<f64>,
}

impl Instance {
    pub fn build(config: &ExperimentConfig, mesh: (usize, usize), points: &ObservationSet, alpha: f64) -> Result<Self> {
        let mesh = TriMesh::new(config.lx, config.ly, mesh.0, mesh.1)?;
        let ops = ProblemOperators::assemble_with(
            &mesh,
            points.points(),
            config.nitsche_penalty,
            config.regularization_shift,
        )?;
        let q_true = true_source(config, &mesh)?;
        let data = ops.synthesize_data(&q_true)?;
        let system = KktSystem::build(&ops, alpha, &data)?;
        let reference = reference_solution(&system).map_err(|e| e.context("reference solution"))?;
        Ok(Instance {
            mesh,
            q_true,
            system,
            reference,
        })
    }

    pub fn reference_parameter(&self) -> &[f64] {
        &self.reference[self.system.parameter_range()]
    }

    fn options(&self, config: &ExperimentConfig, range: std::ops::Range<usize>, full: bool) -> SolveOptions<'_> {
        let solution = if full { &self.reference[..] } else { self.reference_parameter() };
        let mut options = SolveOptions::new(config.tol, config.maxit)
            .with_reference(Reference { solution, range })
            .record_iterates(&config.snapshots);
        if config.stop_at_target {
            options = options.stop_below_error(config.target_error);
        }
        options
    }

    /// MINRES on the KKT system with a BDAL preconditioner.
    pub fn run_minres(&self, config: &ExperimentConfig, kind: PreconditionerKind, run_id: String) -> (RunRecord, SolveSnapshots) {
        let settings = PreconditionerSettings {
            rho: Some(config.rho.rho(self.system.alpha)),
            inner_tol: config.inner_tol,
        };
        let outcome = Preconditioner::new(&self.system, kind, settings).and_then(|p| {
            let range = self.system.parameter_range();
            minres(&self.system, &p, &self.system.rhs, &self.options(config, range, true))
        });
        match outcome {
            Ok(report) => {
                let range = self.system.parameter_range();
                let parameter = report.solution[range.clone()].to_vec();
                let snapshots = report.iterates.iter().map(|(k, x)| (*k, x[range.clone()].to_vec())).collect();
                (RunRecord::from_report(run_id, &report, parameter, config.target_error), snapshots)
            }
            Err(e) => (RunRecord::failed(run_id, &e), Vec::new()),
        }
    }

    /// CG on the reduced Hessian preconditioned by the regularization.
    pub fn run_cg_hess(&self, config: &ExperimentConfig, run_id: String) -> (RunRecord, SolveSnapshots) {
        let outcome = ReducedHessianOperator::new(&self.system).and_then(|h| {
            let rhs = h.rhs(&self.system)?;
            let options = self.options(config, 0..self.system.n(), false);
            pcg(&h, &h.regularization_preconditioner(), &rhs, &options)
        });
        match outcome {
            Ok(report) => {
                let snapshots = report.iterates.clone();
                let parameter = report.solution.clone();
                (RunRecord::from_report(run_id, &report, parameter, config.target_error), snapshots)
            }
            Err(e) => (RunRecord::failed(run_id, &e), Vec::new()),
        }
    }
}

/// `(iteration, parameter iterate)` pairs kept for snapshots.
pub type SolveSnapshots = Vec<(usize, Vec<f64>)>;

fn write_config_echo(config: &ExperimentConfig, name: &str) -> Result<()> {
    write_atomic(&config.out.join(name), config.echo().as_bytes())
}

/// Convergence comparison on the first mesh, `α` and `n_obs` of the
/// configuration: MINRES with each listed preconditioner and, optionally,
/// CG on the reduced Hessian. Writes `convergence.csv`,
/// `convergence_summary.csv`, the source, reference and snapshot images.
pub fn run_convergence(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let points = prepare_observations(config, config.n_obs[0])?;
    let instance = Instance::build(config, config.meshes[0], &points, config.alphas[0])?;
    write_config_echo(config, "convergence_config.txt")?;
    write_source_metadata(config)?;
    write_field(&config.out.join("source.pgm"), &instance.mesh, &instance.q_true)?;
    write_field(&config.out.join("reference.pgm"), &instance.mesh, instance.reference_parameter())?;

    let mut records = Vec::new();
    let mut runs: Vec<(RunRecord, SolveSnapshots)> = config
        .preconditioners
        .iter()
        .map(|&kind| instance.run_minres(config, kind, format!("minres-{kind}")))
        .collect();
    if config.cg_hess {
        runs.push(instance.run_cg_hess(config, "cg-hess".into()));
    }
    for (record, snapshots) in runs {
        for (k, q) in &snapshots {
            let path = config.out.join(format!("snapshot_{}_iter{k:03}.pgm", record.run_id));
            write_field(&path, &instance.mesh, q)?;
        }
        records.push(record);
    }
    runs_table(&records, config.timing).write(&config.out.join("convergence.csv"))?;
    summary_table(&records).write(&config.out.join("convergence_summary.csv"))?;
    Ok(records)
}

/// Per-mesh iteration counts with one observation file shared by every
/// mesh. Writes `mesh_study.csv` and `mesh_study_summary.csv`.
pub fn run_mesh_study(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    if config.meshes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a mesh study needs at least three meshes, got {}",
            config.meshes.len()
        )));
    }
    let points = prepare_observations(config, config.n_obs[0])?;
    write_config_echo(config, "mesh_study_config.txt")?;
    let alpha = config.alphas[0];
    let mut records = Vec::new();
    let mut summary = CsvTable::new(&["mesh", "n", "h", "preconditioner", "iterations-to-target"]);
    for &(nx, ny) in &config.meshes {
        let instance = Instance::build(config, (nx, ny), &points, alpha)?;
        for &kind in &config.preconditioners {
            let (record, _) = instance.run_minres(config, kind, format!("{nx}x{ny}-minres-{kind}"));
            summary.push(&[
                format!("{nx}x{ny}"),
                instance.system.n().to_string(),
                format_float(instance.mesh.h()),
                kind.to_string(),
                count_field(record.iterations_to_target),
            ]);
            records.push(record);
        }
    }
    runs_table(&records, config.timing).write(&config.out.join("mesh_study.csv"))?;
    summary.write(&config.out.join("mesh_study_summary.csv"))?;
    Ok(records)
}

/// Iteration counts over the `α × n_obs` grid on the first mesh.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    /// `matrix[i][j]` for `alphas[i]` and `n_obs[j]`.
    pub matrix: Vec<Vec<Option<usize>>>,
}

/// Regularization and data sweep with the first listed preconditioner.
/// Observation files for every `n_obs` are written before any solve.
/// Writes `sweep.csv` and `sweep_matrix.csv` (rows `α`, columns `n_obs`,
/// `-1` where the target was not reached).
pub fn run_reg_data_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let point_sets = config
        .n_obs
        .iter()
        .map(|&n| prepare_observations(config, n))
        .collect::<Result<Vec<_>>>()?;
    write_config_echo(config, "sweep_config.txt")?;
    let kind = config.preconditioners[0];
    let mut records = Vec::new();
    let mut matrix = vec![vec![None; config.n_obs.len()]; config.alphas.len()];
    for (i, &alpha) in config.alphas.iter().enumerate() {
        for (j, points) in point_sets.iter().enumerate() {
            let instance = Instance::build(config, config.meshes[0], points, alpha)?;
            let run_id = format!("alpha{alpha:e}-nobs{}-minres-{kind}", config.n_obs[j]);
            let (record, _) = instance.run_minres(config, kind, run_id);
            matrix[i][j] = record.iterations_to_target;
            records.push(record);
        }
    }
    runs_table(&records, config.timing).write(&config.out.join("sweep.csv"))?;
    let mut header = vec!["alpha".to_string()];
    header.extend(config.n_obs.iter().map(|n| n.to_string()));
    let mut table = CsvTable::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, &alpha) in config.alphas.iter().enumerate() {
        let mut row = vec![format_float(alpha)];
        row.extend(matrix[i].iter().map(|&c| count_field(c)));
        table.push(&row);
    }
    table.write(&config.out.join("sweep_matrix.csv"))?;
    Ok(SweepResult { records, matrix })
}

/// Dense conditioning analysis of one instance.
#[derive(Debug, Clone)]
pub struct TheoryRecord {
    pub instance: String,
    pub mesh: (usize, usize),
    pub n_obs: usize,
    pub alpha: f64,
    pub rho: f64,
    pub report: std::result::Result<ConditionReport, String>,
}

impl TheoryRecord {
    /// Failed bounds, or the analysis error.
    pub fn violations(&self) -> Vec<String> {
        match &self.report {
            Ok(report) => report.violations(),
            Err(e) => vec![e.clone()],
        }
    }
}

/// Dense bound verification over `meshes × n_obs × α` with the unlumped
/// BDAL preconditioner. Writes `theory.csv`; the caller decides how to
/// treat violations.
pub fn run_theory_verification(config: &ExperimentConfig) -> Result<Vec<TheoryRecord>> {
    config.validate()?;
    let point_sets = config
        .n_obs
        .iter()
        .map(|&n| prepare_observations(config, n))
        .collect::<Result<Vec<_>>>()?;
    write_config_echo(config, "theory_config.txt")?;
    let mut records = Vec::new();
    for &(nx, ny) in &config.meshes {
        let mesh = TriMesh::new(config.lx, config.ly, nx, ny)?;
        let q_true = true_source(config, &mesh)?;
        for (j, points) in point_sets.iter().enumerate() {
            let ops = ProblemOperators::assemble_with(
                &mesh,
                points.points(),
                config.nitsche_penalty,
                config.regularization_shift,
            )?;
            let data = ops.synthesize_data(&q_true)?;
            for &alpha in &config.alphas {
                let rho = config.rho.rho(alpha);
                let report = KktSystem::build(&ops, alpha, &data)
                    .and_then(|sys| {
                        let settings = PreconditionerSettings {
                            rho: Some(rho),
                            inner_tol: config.inner_tol,
                        };
                        let p = Preconditioner::new(&sys, PreconditionerKind::BdalExact, settings)?;
                        analyze_bounds(&sys, &p)
                    })
                    .map_err(|e| e.to_string());
                records.push(TheoryRecord {
                    instance: format!("{nx}x{ny}-nobs{}-alpha{alpha:e}", config.n_obs[j]),
                    mesh: (nx, ny),
                    n_obs: config.n_obs[j],
                    alpha,
                    rho,
                    report,
                });
            }
        }
    }
    theory_table(&records).write(&config.out.join("theory.csv"))?;
    Ok(records)
}

fn theory_table(records: &[TheoryRecord]) -> CsvTable {
    let mut table = CsvTable::new(&[
        "instance",
        "mesh",
        "n-obs",
        "alpha",
        "rho",
        "delta",
        "beta",
        "sigma-min-E",
        "sigma-max-E",
        "cond-E",
        "bound-cond",
        "bound-sigma-min",
        "sigma-min-Y",
        "lambda-min-augmented",
        "status",
    ]);
    for r in records {
        let mut row = vec![
            r.instance.clone(),
            format!("{}x{}", r.mesh.0, r.mesh.1),
            r.n_obs.to_string(),
            format_float(r.alpha),
            format_float(r.rho),
        ];
        match &r.report {
            Ok(c) => {
                row.extend(
                    [
                        c.delta,
                        c.beta,
                        c.sigma_min_e,
                        c.sigma_max_e,
                        c.cond_e,
                        c.bound_cond,
                        c.bound_sigma_min,
                        c.sigma_min_y,
                        c.lambda_min_augmented,
                    ]
                    .map(format_float),
                );
                let violations = c.violations();
                row.push(if violations.is_empty() {
                    "pass".into()
                } else {
                    format!("violated: {}", violations.join("; ").replace(',', ";"))
                });
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(format!("error: {}", e.replace([',', '\n'], ";")));
            }
        }
        table.push(&row);
    }
    table
}

/// Writes the observation file of every configured `n_obs`.
pub fn write_observation_files(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    config
        .n_obs
        .iter()
        .map(|&n| {
            let path = observation_path(config, n);
            let set = generate_observations(config.seed, n, config.lx, config.ly)?;
            write_atomic(&path, set.to_text().as_bytes())?;
            Ok(path)
        })
        .collect()
}

/// Writes the true source of every configured mesh as
/// `source_<nx>x<ny>.pgm`, with the formula in `source.txt`.
pub fn write_source_files(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    write_source_metadata(config)?;
    config
        .meshes
        .iter()
        .map(|&(nx, ny)| {
            let mesh = TriMesh::new(config.lx, config.ly, nx, ny)?;
            let path = config.out.join(format!("source_{nx}x{ny}.pgm"));
            write_field(&path, &mesh, &true_source(config, &mesh)?)?;
            Ok(path)
        })
        .collect()
}
