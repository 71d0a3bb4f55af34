//! Seeded end-to-end runs: build, attack, inspect, measure, report.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, SystemMode};
pub use report::{mean_report, MetricsReport, CSV_HEADER};
pub use run::{
    load_dataset, run_experiment, run_on_graph, sweep, sweep_csv, sweep_on_graph, sweep_seed,
    Measurement, SweepRow, World,
};
