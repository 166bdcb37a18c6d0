//! Configuration, experiment orchestration and artifact emission.

pub mod config;
pub mod experiment;
pub mod gradcheck;
pub mod sweep;

pub use config::{load_config, parse_config, Algo, ExperimentConfig, LoadedConfig, KEYS};
pub use experiment::{
    evaluate, evaluate_checkpoints, make_env, make_trainer, run_experiment, run_seed, train_seed, EpisodeSummary,
    ExperimentOutcome, MetricsRow, SeedRun,
};
pub use gradcheck::{gradcheck_suite, run_gradcheck, ComponentReport, GradComponent, GradProblem, GRADCHECK_TOLERANCE};
pub use sweep::{sweep_collaboration, sweep_trained, SweepRow, SweepTable};
