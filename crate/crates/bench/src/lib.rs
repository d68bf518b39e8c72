//! Experiment harness for self-repulsive Langevin dynamics.
//!
//! Loads declarative experiment configs, runs seed sweeps (optionally with
//! coupled noise), scores every chain against a reference draw and writes
//! CSV traces, a `metrics.json` summary and SVG charts.

pub mod config;
pub mod experiment;
pub mod report;
pub mod stats;
pub mod svg;
pub mod trace_csv;

pub use config::{ExperimentConfig, MethodEntry, MethodKind, Pairing};
pub use experiment::{run_experiment, ComparisonResult};
pub use report::{emit_reports, MetricsDocument};
