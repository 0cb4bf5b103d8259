//! Monte Carlo experiments, statistics and reports.

pub mod config;
pub mod experiment;
pub mod report;
pub mod stats;

pub use config::{ExperimentConfig, Family, Mode};
pub use experiment::{ghost_config, prepare, run_experiment, run_prepared, ExperimentResult, Prepared};
pub use report::{emit_report, parse_csv_report, render_report, ReportFormat, CSV_COLUMNS};
pub use stats::{binomial_sigma, likelihood_interval, not_above, significantly_below};
