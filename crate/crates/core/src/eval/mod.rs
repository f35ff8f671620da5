//! Metrics, baseline filters and the experiment harness.

pub mod baselines;
pub mod metrics;

pub use baselines::{baseline_average, baseline_separate, baseline_slice, AverageMode};
pub use metrics::{mean, mean_rrmse_phase, rrmse_amp, rrmse_amp_bands, rrmse_phase, rrmse_phase_bands, snr_db};
pub mod experiment;

pub use experiment::{
    read_csv, run_experiment, run_method, write_csv, ExperimentOutcome, Manifest, MethodEntry, MethodKind, MetricsReport,
    MetricsRow, Method, MethodOutput,
};
