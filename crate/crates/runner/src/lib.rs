//! Experiment runner for the `qkd-core` simulator: configuration, orchestration
//! and CSV/JSON reporting behind the `qkdlab` command.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, Protocol, QberDef, ReadoutMode};
