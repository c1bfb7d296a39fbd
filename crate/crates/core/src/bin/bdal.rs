use std::path::PathBuf;
use std::process::ExitCode;

use bdal_core::harness::{
    run_convergence, run_mesh_study, run_reg_data_sweep, run_theory_verification, write_observation_files,
    write_source_files, ExperimentConfig, RunRecord,
};
use bdal_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

const EXIT_ERROR: u8 = 1;
const EXIT_THEORY_VIOLATION: u8 = 2;

/// Experiments with block-diagonal augmented Lagrangian preconditioners for
/// Poisson source inversion.
#[derive(Parser)]
#[command(name = "bdal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare MINRES with each preconditioner against CG on the reduced Hessian.
    Convergence(Common),
    /// Iterations to the target error on each configured mesh.
    MeshStudy(Common),
    /// Iteration counts over the alpha x n_obs grid.
    Sweep(Common),
    /// Dense check of the conditioning bounds; exits with 2 on a violation.
    VerifyTheory(Common),
    /// Write the observation file of every configured n_obs.
    GenObs(Common),
    /// Write the true source on every configured mesh.
    SynthSource(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed of the observation sampler.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override any configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for item in &self.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("--set expects KEY=VALUE, got {item:?}")))?;
            config.set(key.trim(), value.trim())?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn print_runs(records: &[RunRecord]) {
    for r in records {
        let target = r.iterations_to_target.map_or_else(|| "not reached".to_string(), |k| k.to_string());
        match &r.failure {
            Some(msg) => println!("{}: failed: {msg}", r.run_id),
            None => println!(
                "{}: {} iterations, target reached at {target}, final error {:.3e}",
                r.run_id,
                r.rows.last().map_or(0, |row| row.iteration),
                r.rows.last().map_or(f64::NAN, |row| row.rel_param_error)
            ),
        }
    }
}

fn run(command: &Command) -> Result<u8> {
    match command {
        Command::Convergence(c) => {
            let config = c.load()?;
            print_runs(&run_convergence(&config)?);
        }
        Command::MeshStudy(c) => {
            let config = c.load()?;
            print_runs(&run_mesh_study(&config)?);
        }
        Command::Sweep(c) => {
            let config = c.load()?;
            let sweep = run_reg_data_sweep(&config)?;
            print_runs(&sweep.records);
        }
        Command::VerifyTheory(c) => {
            let config = c.load()?;
            let records = run_theory_verification(&config)?;
            let mut failed = false;
            for r in &records {
                let violations = r.violations();
                if violations.is_empty() {
                    if let Ok(report) = &r.report {
                        println!(
                            "{}: pass (cond {:.4e} <= {:.4e})",
                            r.instance, report.cond_e, report.bound_cond
                        );
                    }
                } else {
                    failed = true;
                    eprintln!("{}: {}", r.instance, violations.join("; "));
                }
            }
            if failed {
                return Ok(EXIT_THEORY_VIOLATION);
            }
        }
        Command::GenObs(c) => {
            for path in write_observation_files(&c.load()?)? {
                println!("{}", path.display());
            }
        }
        Command::SynthSource(c) => {
            for path in write_source_files(&c.load()?)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
