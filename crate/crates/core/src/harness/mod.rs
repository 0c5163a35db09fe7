//! Power sweeps, timing benchmarks and result output.

mod bench;
mod config;
mod demo;
mod emit;
mod policy;
mod power;

pub use bench::{log_log_slope, run_timing_bench, BENCH_SHIFT};
pub use config::{BandwidthPolicy, ExperimentConfig, GridPoint, RPolicy, Sweep};
pub use demo::{
    bandwidth_for_mass, check_spectral_mass, run_inconsistency_demo, spectral_mass, SPECTRAL_MASS_LIMIT,
};
pub use emit::{emit_results, read_csv_rows, write_results, ExperimentRecord, OutputFormat, ResultRow, CSV_COLUMNS};
pub use policy::{l2_rate, theory_parameter_policy, PolicyChoice, TheoryPolicy};
pub use power::{repetition_stream, resolve_features, run_power_sweep};
