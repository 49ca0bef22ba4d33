//! Experiment runner for the generalized Camassa-Holm solver: configuration, artifacts and self-checks.

pub mod config;
pub mod experiment;
pub mod fields;
pub mod selftest;

pub use config::{parse_config, ConfigError, ConfigErrors, Diagnostic, ExperimentConfig};
pub use experiment::{run_experiment, RunError, RunSummary, Stage};
pub use selftest::{selftest, selftest_with, Faults, SelftestReport};
