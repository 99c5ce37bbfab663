//! Analytics over trained models and finished runs: loss landscapes,
//! spectral diagnostics, confidence intervals and timing.

mod landscape;
mod stats;
mod timing;

pub use crate::spectral::{spectral_radius, SpectralEstimate};
pub use landscape::{
    landscape_along, linspace, loss_landscape, random_direction, shifted_params, LandscapeConfig, LandscapeGrid,
};
pub use stats::{mean, median, sample_std, summarize_runs, CiMethod, RunSummary, Z_95};
pub use timing::{
    perturbation_step_bytes, time_optimizer, write_timing_csv, TimedOptimizer, TimingConfig, TimingPhase,
    TimingRecord,
};
