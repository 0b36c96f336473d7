//! Benchmark runner for the continuation controller: experiment
//! configuration, closed-loop execution, CSV trace export, method comparison,
//! and a self-check sweep.

pub mod config;
pub mod runner;
pub mod selfcheck;

pub use config::{ConfigError, ExperimentConfig, Method, SolverKind, SolverSettings};
pub use runner::{
    compare_methods, render_comparison_csv, render_trace_csv, run_experiment, switch_off_time,
    Comparison, CompareRecord, RunError, OFF_THRESHOLD,
};
