//! Configuration, reproducible sampling and the experiment drivers.

mod config;
mod output;
mod rng;
mod runs;
mod sampling;

pub use config::{ExperimentConfig, RhoPolicy, SourceSpec};
pub use output::{format_float, write_atomic, CsvTable};
pub use rng::SplitMix64;
pub use runs::{
    observation_path, prepare_observations, run_convergence, run_mesh_study, run_reg_data_sweep,
    run_theory_verification, true_source, write_observation_files, write_source_files, Instance, IterationRow,
    RunRecord, SolveSnapshots, SweepResult, TheoryRecord, RUN_CSV_HEADER,
};
pub use sampling::{generate_observations, synth_source, BOUNDARY_MARGIN, SYNTHETIC_SOURCE_FORMULA};
