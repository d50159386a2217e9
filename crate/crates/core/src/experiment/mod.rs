//! Config ingestion, seeded experiment orchestration and result emission.

pub mod config;
pub mod output;
pub mod runner;
pub mod scenario;

pub use config::{config_from_value, load_config, set_path, ExperimentConfig, ExperimentKind, Method};
pub use output::{read_kpis, summarize, ExperimentSummary, KpiRow};
pub use runner::{run_experiment, run_single, ExperimentReport, RunOutput};
pub use scenario::build_model;
