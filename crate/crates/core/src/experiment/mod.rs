//! Configured experiments: presets, seeded runs, comparisons.

mod compare;
mod config;
mod presets;
mod runner;

pub use compare::{compare, compare_records, find_records, write_comparison_csv, ComparisonRow};
pub use config::{
    ExperimentConfig, Features, ModelConfig, OptimizerConfig, OptimizerId, TaskConfig, TaskKind, TrainingConfig,
};
pub use presets::{preset, preset_names, preset_source};
pub use runner::{
    load_run, run_dir, run_experiment, run_landscape, run_seed, write_run, xor_accuracy, Forecast, RunRecord, RunResult, RunStatus,
};
