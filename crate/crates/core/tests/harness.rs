use std::fs;
use std::path::Path;
use std::process::Command;

use bdal_core::fem::{GrayImage, ObservationSet};
use bdal_core::harness::{
    observation_path, run_convergence, run_mesh_study, run_reg_data_sweep, run_theory_verification,
    ExperimentConfig, RUN_CSV_HEADER,
};
use bdal_core::inverse::PreconditionerKind;
use bdal_core::relative_error;

fn small_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        meshes: vec![(6, 4)],
        n_obs: vec![25],
        alphas: vec![1e-6],
        preconditioners: vec![
            PreconditionerKind::BdalExact,
            PreconditionerKind::BdalLumpedExact,
            PreconditionerKind::BdalLumpedInexact,
        ],
        maxit: 400,
        snapshots: vec![3, 10],
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn bdal() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdal"))
}

#[test]
fn convergence_runs_agree_with_reference() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let records = run_convergence(&config).unwrap();
    assert_eq!(records.len(), 4);
    let reference = &records[0].parameter;
    for r in &records {
        assert!(r.failure.is_none(), "{}: {:?}", r.run_id, r.failure);
        assert!(r.converged, "{}", r.run_id);
        assert!(r.rows.len() <= config.maxit + 1);
        assert!(r.rows.last().unwrap().rel_param_error < 1e-6, "{}", r.run_id);
        assert!(relative_error(&r.parameter, reference) < 1e-6);
    }
    let exact = &records[0].rows;
    let lumped = &records[1].rows;
    let k = exact.len().min(lumped.len()) / 2;
    assert!((exact[k].rel_param_error.log10() - lumped[k].rel_param_error.log10()).abs() < 1.0);

    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), RUN_CSV_HEADER.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), records.iter().map(|r| r.rows.len()).sum::<usize>());
    for row in &rows {
        assert_eq!(row.len(), 5);
        assert_eq!(row[4], "");
        let mantissa = row[2].trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    }

    for name in ["source.pgm", "reference.pgm", "snapshot_cg-hess_iter003.pgm", "snapshot_minres-bdal-exact_iter010.pgm"]
    {
        let image = GrayImage::read_pgm(&dir.path().join(name)).unwrap();
        assert_eq!((image.width(), image.height()), (7, 5), "{name}");
    }
    let source = fs::read_to_string(dir.path().join("source.txt")).unwrap();
    assert!(source.contains("exp"));
    let observations = ObservationSet::read(&observation_path(&config, 25), config.lx, config.ly).unwrap();
    assert_eq!(observations.len(), 25);
}

#[test]
fn timing_column_is_filled_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        timing: true,
        cg_hess: false,
        preconditioners: vec![PreconditionerKind::BdalLumpedExact],
        ..small_config(dir.path())
    };
    run_convergence(&config).unwrap();
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let wall: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(wall >= 0.0);
    }
}

#[test]
fn mesh_study_shares_observations() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        meshes: vec![(4, 3), (8, 6), (16, 12)],
        alphas: vec![1e-2],
        preconditioners: vec![PreconditionerKind::BdalLumpedExact],
        cg_hess: false,
        stop_at_target: true,
        ..small_config(dir.path())
    };
    let records = run_mesh_study(&config).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.iterations_to_target.is_some()));
    let summary = fs::read_to_string(dir.path().join("mesh_study_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("mesh,n,h,preconditioner,iterations-to-target\n"));

    let too_few = ExperimentConfig {
        meshes: vec![(4, 3), (8, 6)],
        ..config
    };
    assert!(run_mesh_study(&too_few).is_err());
}

#[test]
fn sweep_matrix_has_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        alphas: vec![1.0, 1e-2, 1e-4],
        n_obs: vec![10, 40],
        preconditioners: vec![PreconditionerKind::BdalLumpedExact],
        stop_at_target: true,
        ..small_config(dir.path())
    };
    let sweep = run_reg_data_sweep(&config).unwrap();
    assert_eq!(sweep.matrix.len(), 3);
    assert!(sweep.matrix.iter().all(|row| row.len() == 2));
    assert!(sweep.matrix[0].iter().all(|k| k.is_some_and(|k| k <= 20)));
    let matrix = fs::read_to_string(dir.path().join("sweep_matrix.csv")).unwrap();
    let lines: Vec<&str> = matrix.lines().collect();
    assert_eq!(lines[0], "alpha,10,40");
    assert_eq!(lines.len(), 4);
    assert!(dir.path().join("observations_n10.txt").exists());
    assert!(dir.path().join("observations_n40.txt").exists());
}

#[test]
fn theory_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        meshes: vec![(4, 3)],
        n_obs: vec![10],
        alphas: vec![1e-2, 1e-4],
        ..small_config(dir.path())
    };
    let records = run_theory_verification(&config).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.violations().is_empty()));
    let csv = fs::read_to_string(dir.path().join("theory.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for column in ["delta", "beta", "sigma-min-E", "sigma-max-E", "cond-E", "bound-cond", "status"] {
        assert!(header.contains(&column), "{column}");
    }
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn observation_file_override_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("points.txt");
    fs::write(&file, "0.2 0.3\n1.0 0.5\n0.7 0.8\n").unwrap();
    let config = ExperimentConfig {
        observations: Some(file),
        cg_hess: false,
        preconditioners: vec![PreconditionerKind::BdalLumpedExact],
        ..small_config(dir.path())
    };
    run_convergence(&config).unwrap();
    assert!(!observation_path(&config, 25).exists());
}

#[test]
fn pgm_source_is_interpolated() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("source.in.pgm");
    fs::write(&pgm, "P2\n3 2\n255\n0 128 255\n255 128 0\n").unwrap();
    let config = ExperimentConfig {
        source: bdal_core::harness::SourceSpec::Pgm(pgm),
        cg_hess: false,
        preconditioners: vec![PreconditionerKind::BdalLumpedExact],
        ..small_config(dir.path())
    };
    let records = run_convergence(&config).unwrap();
    assert!(records[0].converged);
}

#[test]
fn cli_gen_obs_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("obs");
    let output = bdal()
        .args(["gen-obs", "--seed", "1", "--set", "n_obs=3,5", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let three = ObservationSet::read(&out.join("observations_n3.txt"), 1.45, 1.0).unwrap();
    let five = ObservationSet::read(&out.join("observations_n5.txt"), 1.45, 1.0).unwrap();
    assert_eq!(three.points(), &five.points()[..3]);
    assert_eq!(three.points()[0][0], 10451216379200822465u64 as f64 / 2f64.powi(64) * 1.45);
}

#[test]
fn cli_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# synthetic source on two meshes\nmesh = 4x3, 8x6\nseed = 5\n").unwrap();
    let out = dir.path().join("src");
    let output = bdal()
        .args(["synth-source", "--config"])
        .arg(&cfg)
        .args(["--set", "mesh=5x4", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(out.join("source_5x4.pgm").exists());
    assert!(!out.join("source_4x3.pgm").exists());
    assert!(out.join("source.txt").exists());
}

#[test]
fn cli_verify_theory_passes() {
    let dir = tempfile::tempdir().unwrap();
    let output = bdal()
        .args(["verify-theory", "--set", "mesh=4x3", "--set", "n_obs=8", "--set", "alpha=1e-2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).contains("pass"));
}

#[test]
fn cli_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["sweep", "--set", "tol=2"],
        vec!["sweep", "--set", "alpha=-1"],
        vec!["convergence", "--set", "bogus=1"],
        vec!["convergence", "--set", "novalue"],
        vec!["convergence", "--config", "/nonexistent/run.cfg"],
        vec!["mesh-study", "--set", "mesh=4x3"],
        vec!["convergence", "--set", "preconditioners=reduced-regularization"],
        vec!["unknown-subcommand"],
        vec!["convergence", "--seed", "not-a-number"],
    ];
    for args in cases {
        let output = bdal().args(&args).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(output.status.code(), Some(1), "{args:?}");
        assert!(!output.stderr.is_empty(), "{args:?}");
    }
}
