//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bdal_core::fem::{manufactured_poisson_error, TriMesh, DEFAULT_NITSCHE_PENALTY};
use bdal_core::harness::{prepare_observations, run_theory_verification, ExperimentConfig, Instance, SplitMix64};
use bdal_core::inverse::PreconditionerKind;
use bdal_core::relative_error;
use bdal_core::spectral::{damped_projector_constants_exact, filter_constants, model_problem_sequences, psi_sigma_max};

const TARGET_ERROR: f64 = 1e-5;

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report(id: usize, name: &'static str, passed: bool, detail: String, elapsed: Duration) -> Outcome {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {id} ({name}): {detail} [{:.1} s]", elapsed.as_secs_f64());
    Outcome {
        id,
        name,
        passed,
        detail,
    }
}

fn config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        out: out.to_path_buf(),
        target_error: TARGET_ERROR,
        snapshots: Vec::new(),
        ..ExperimentConfig::default()
    }
}

fn iterations_to_target(
    config: &ExperimentConfig,
    mesh: (usize, usize),
    n_obs: usize,
    alpha: f64,
) -> Result<Option<usize>, String> {
    let points = prepare_observations(config, n_obs).map_err(|e| e.to_string())?;
    let instance = Instance::build(config, mesh, &points, alpha).map_err(|e| e.to_string())?;
    let (record, _) = instance.run_minres(config, PreconditionerKind::BdalLumpedExact, "minres".into());
    match record.failure {
        Some(msg) => Err(msg),
        None => Ok(record.iterations_to_target),
    }
}

fn show(count: Result<Option<usize>, String>) -> String {
    match count {
        Ok(Some(k)) => k.to_string(),
        Ok(None) => "not reached".into(),
        Err(e) => format!("error ({e})"),
    }
}

fn theory_suite(out: &Path) -> Outcome {
    let start = Instant::now();
    let mut config = config(out);
    config.meshes = vec![(10, 7), (20, 14)];
    config.n_obs = vec![50, 200];
    config.alphas = vec![1e-2, 1e-4, 1e-6];
    let (passed, detail) = match run_theory_verification(&config) {
        Ok(records) => {
            let failures: Vec<String> = records
                .iter()
                .filter(|r| !r.violations().is_empty())
                .map(|r| format!("{}: {}", r.instance, r.violations().join("; ")))
                .collect();
            let elapsed = start.elapsed();
            let passed = records.len() >= 12 && failures.is_empty() && elapsed <= Duration::from_secs(300);
            let detail = if failures.is_empty() {
                format!("{} instances, all five bounds hold with slack 1e-8", records.len())
            } else {
                format!("{} of {} instances violate: {}", failures.len(), records.len(), failures.join(" | "))
            };
            (passed, detail)
        }
        Err(e) => (false, format!("error: {e}")),
    };
    report(1, "conditioning bounds", passed, detail, start.elapsed())
}

fn filter_dominance() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    for n_obs in [20, 100, 200] {
        for alpha in [1.0, 1e-2, 1e-4, 1e-6, 1e-8] {
            let rho = f64::sqrt(alpha);
            let model = match model_problem_sequences(200, n_obs, |k| k as f64, alpha, rho) {
                Ok(m) => m,
                Err(e) => {
                    failures.push(format!("n_obs {n_obs}, alpha {alpha:e}: {e}"));
                    continue;
                }
            };
            let c_u = model
                .d()
                .iter()
                .zip(model.r())
                .map(|(d, r)| d * d + alpha * r * r)
                .fold(f64::INFINITY, f64::min);
            let exact = damped_projector_constants_exact(&model);
            match filter_constants(&model, c_u, 1.0) {
                Ok(filter) => {
                    checked += 1;
                    if exact.delta < filter.delta - 1e-12 || exact.beta > filter.beta + 1e-12 {
                        failures.push(format!(
                            "n_obs {n_obs}, alpha {alpha:e}: exact ({:e}, {:e}) vs filter ({:e}, {:e})",
                            exact.delta, exact.beta, filter.delta, filter.beta
                        ));
                    }
                    let alpha_free = (1.0 + c_u).powf(-0.5);
                    if filter.beta > alpha_free + 1e-12 || exact.beta > alpha_free + 1e-12 {
                        failures.push(format!(
                            "n_obs {n_obs}, alpha {alpha:e}: beta {:e} above (1 + c_u)^(-1/2) = {alpha_free:e}",
                            filter.beta
                        ));
                    }
                }
                Err(e) => failures.push(format!("n_obs {n_obs}, alpha {alpha:e}: {e}")),
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} model sequences, exact constants dominate and beta <= (1 + c_u)^(-1/2)")
    } else {
        failures.join(" | ")
    };
    report(2, "spectral-filter constants", failures.is_empty(), detail, start.elapsed())
}

fn convergence_comparison(out: &Path) -> Outcome {
    let start = Instant::now();
    let mut config = config(out);
    config.maxit = 200;
    let result = prepare_observations(&config, 500)
        .and_then(|points| Instance::build(&config, (29, 20), &points, 1e-6))
        .map(|instance| {
            let (minres, _) = instance.run_minres(&config, PreconditionerKind::BdalLumpedExact, "minres".into());
            let cg_config = ExperimentConfig {
                maxit: 50,
                ..config.clone()
            };
            let (cg, _) = instance.run_cg_hess(&cg_config, "cg-hess".into());
            (minres, cg)
        });
    let (passed, detail) = match result {
        Ok((minres, cg)) => {
            let iterations = minres.iterations_to_target;
            let minres_3 = minres.error_at(3);
            let cg_50 = cg.error_at(50);
            let fast = iterations.is_some_and(|k| k <= 30);
            let ahead = matches!((minres_3, cg_50), (Some(a), Some(b)) if a < b);
            (
                fast && ahead && start.elapsed() <= Duration::from_secs(120),
                format!(
                    "MINRES+bdal-lumped-exact iterations to 1e-5: {} (need <= 30); error at iteration 3: {} vs CG-HESS at 50: {}",
                    show(Ok(iterations)),
                    minres_3.map_or("n/a".into(), |e| format!("{e:.3e}")),
                    cg_50.map_or("n/a".into(), |e| format!("{e:.3e}")),
                ),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    };
    report(3, "convergence comparison", passed, detail, start.elapsed())
}

fn mesh_independence(out: &Path) -> Outcome {
    let start = Instant::now();
    let mut config = config(out);
    config.stop_at_target = true;
    config.maxit = 300;
    let meshes = [(10, 7), (20, 14), (40, 28)];
    let counts: Vec<_> = meshes.iter().map(|&m| iterations_to_target(&config, m, 200, 1e-6)).collect();
    let values: Vec<usize> = counts.iter().filter_map(|c| c.clone().ok().flatten()).collect();
    let spread = (values.len() == meshes.len())
        .then(|| values.iter().max().unwrap() - values.iter().min().unwrap());
    let passed = spread.is_some_and(|s| s <= 2) && start.elapsed() <= Duration::from_secs(180);
    let detail = format!(
        "iterations to 1e-5 on 10x7 / 20x14 / 40x28: {} (spread {}, need <= 2)",
        counts.into_iter().map(show).collect::<Vec<_>>().join(" / "),
        spread.map_or("n/a".into(), |s| s.to_string())
    );
    report(4, "mesh independence", passed, detail, start.elapsed())
}

fn data_scalability(out: &Path) -> Outcome {
    let start = Instant::now();
    let mut config = config(out);
    config.stop_at_target = true;
    config.maxit = 400;
    let many = iterations_to_target(&config, (20, 14), 500, 1e-8);
    let few = iterations_to_target(&config, (20, 14), 100, 1e-8);
    let passed = match (&many, &few) {
        (Ok(Some(a)), Ok(Some(b))) => a <= b,
        _ => false,
    } && start.elapsed() <= Duration::from_secs(120);
    let detail = format!(
        "alpha 1e-8 on 20x14: n_obs 500 needs {}, n_obs 100 needs {}",
        show(many),
        show(few)
    );
    report(5, "data scalability", passed, detail, start.elapsed())
}

/// Largest absolute eigenvalue of a symmetric 2×2 matrix from its
/// characteristic polynomial.
fn symmetric_2x2_spectral_radius(p: f64, q: f64, s: f64) -> f64 {
    let mean = 0.5 * (p + s);
    let radius = (0.25 * (p - s) * (p - s) + q * q).sqrt();
    f64::max((mean + radius).abs(), (mean - radius).abs())
}

fn psi_closed_form() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let mut draw = || 10.0 * (1.0 - rng.next_u64() as f64 / 18_446_744_073_709_551_616.0);
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for _ in 0..1000 {
        let (a, b, c) = (draw(), draw(), draw());
        let off = (1.0 + b / a) / c;
        let oracle = symmetric_2x2_spectral_radius(1.0 / a, off, b / (c * c) * (1.0 + b / a));
        match psi_sigma_max(a, b, c) {
            Ok(s) => worst = worst.max((s - oracle).abs() / oracle),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let elapsed = start.elapsed();
    let passed = errors.is_empty() && worst <= 1e-10 && elapsed < Duration::from_secs(1);
    let detail = if errors.is_empty() {
        format!("1000 random triples, worst relative deviation {worst:.2e} (need <= 1e-10)")
    } else {
        errors.join(" | ")
    };
    report(6, "stability-matrix closed form", passed, detail, elapsed)
}

fn fem_convergence() -> Outcome {
    let start = Instant::now();
    let errors: Result<Vec<(f64, f64)>, String> = [(8, 6), (16, 12), (32, 24), (64, 48)]
        .iter()
        .map(|&(nx, ny)| {
            let mesh = TriMesh::new(1.45, 1.0, nx, ny).map_err(|e| e.to_string())?;
            let err = manufactured_poisson_error(&mesh, DEFAULT_NITSCHE_PENALTY).map_err(|e| e.to_string())?;
            Ok((mesh.h(), err))
        })
        .collect();
    let (passed, detail) = match errors {
        Ok(errors) => {
            let rates: Vec<f64> = errors
                .windows(2)
                .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
                .collect();
            let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
            (
                min_rate >= 1.8 && start.elapsed() < Duration::from_secs(60),
                format!(
                    "L2 rates over three refinements: {} (need >= 1.8)",
                    rates.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
                ),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    };
    report(7, "finite-element convergence", passed, detail, start.elapsed())
}

fn solver_equivalence(out: &Path) -> Outcome {
    let start = Instant::now();
    let mut config = config(out);
    config.tol = 1e-12;
    config.maxit = 2000;
    let result = prepare_observations(&config, 40)
        .and_then(|points| Instance::build(&config, (6, 4), &points, 1e-6))
        .map(|instance| {
            let dense = instance.reference_parameter().to_vec();
            let mut runs = Vec::new();
            for kind in [
                PreconditionerKind::BdalExact,
                PreconditionerKind::BdalLumpedExact,
                PreconditionerKind::BdalLumpedInexact,
            ] {
                runs.push(instance.run_minres(&config, kind, format!("minres-{kind}")).0);
            }
            runs.push(instance.run_cg_hess(&config, "cg-hess".into()).0);
            (dense, runs)
        });
    let (passed, detail) = match result {
        Ok((dense, runs)) => {
            let mut solutions = vec![("dense".to_string(), dense)];
            let mut failures = Vec::new();
            for r in runs {
                match (&r.failure, r.converged) {
                    (None, true) => solutions.push((r.run_id, r.parameter)),
                    (Some(msg), _) => failures.push(format!("{}: {msg}", r.run_id)),
                    (None, false) => failures.push(format!("{}: not converged", r.run_id)),
                }
            }
            let mut worst: f64 = 0.0;
            for i in 0..solutions.len() {
                for j in i + 1..solutions.len() {
                    worst = worst.max(relative_error(&solutions[i].1, &solutions[j].1));
                }
            }
            (
                failures.is_empty() && worst <= 1e-6,
                if failures.is_empty() {
                    format!(
                        "dense, MINRES (three BDAL kinds) and CG-HESS pairwise within {worst:.2e} (need <= 1e-6)"
                    )
                } else {
                    failures.join(" | ")
                },
            )
        }
        Err(e) => (false, format!("error: {e}")),
    };
    report(8, "solver equivalence", passed, detail, start.elapsed())
}

fn artifact_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "pgm" || x == "txt"))
                .filter(|p| !p.file_name().unwrap().to_string_lossy().ends_with("_config.txt"))
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn reproducibility(out: &Path) -> Outcome {
    let start = Instant::now();
    let config_path = out.join("repro.cfg");
    fs::write(
        &config_path,
        "# small instances for rerun comparison\n\
         mesh = 4x3, 6x4, 8x6\n\
         alpha = 1e-2, 1e-4\n\
         n_obs = 12, 30\n\
         maxit = 40\n\
         preconditioners = bdal-exact, bdal-lumped-exact, bdal-lumped-inexact\n\
         snapshots = 1, 5\n",
    )
    .unwrap();
    let subcommands = ["convergence", "mesh-study", "sweep", "verify-theory", "gen-obs", "synth-source"];
    let mut failures = Vec::new();
    let mut compared = 0;
    for sub in subcommands {
        let runs: Vec<_> = ["first", "second"]
            .iter()
            .map(|tag| {
                let dir = out.join(format!("{sub}-{tag}"));
                let status = Command::new(env!("CARGO_BIN_EXE_bdal"))
                    .args([sub, "--config"])
                    .arg(&config_path)
                    .args(["--seed", "11", "--out"])
                    .arg(&dir)
                    .output()
                    .expect("bdal binary runs");
                (status.status.code(), artifact_files(&dir))
            })
            .collect();
        let (code, files) = &runs[0];
        if *code != Some(0) {
            failures.push(format!("{sub} exited with {code:?}"));
        } else if files.is_empty() {
            failures.push(format!("{sub} wrote no artifacts"));
        } else if runs[0] != runs[1] {
            failures.push(format!("{sub} artifacts differ between runs"));
        } else {
            compared += files.len();
        }
    }
    let detail = if failures.is_empty() {
        format!("six subcommands rerun, {compared} CSV/PGM/text artifacts byte-identical")
    } else {
        failures.join(" | ")
    };
    report(9, "reproducibility", failures.is_empty(), detail, start.elapsed())
}

#[test]
fn acceptance() {
    let work = tempfile::tempdir().unwrap();
    let sub = |name: &str| {
        let dir = work.path().join(name);
        fs::create_dir_all(&dir).unwrap();
        dir
    };
    let outcomes = vec![
        theory_suite(&sub("c1")),
        filter_dominance(),
        convergence_comparison(&sub("c3")),
        mesh_independence(&sub("c4")),
        data_scalability(&sub("c5")),
        psi_closed_form(),
        fem_convergence(),
        solver_equivalence(&sub("c8")),
        reproducibility(&sub("c9")),
    ];
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("criterion {} ({}): {}", o.id, o.name, o.detail))
        .collect();
    println!(
        "{} of {} acceptance criteria pass",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(failed.is_empty(), "failing acceptance criteria:\n{}", failed.join("\n"));
}
