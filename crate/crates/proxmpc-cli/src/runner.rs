//! Experiment execution, trace serialization, and the two-method comparison.

use std::fmt::Write as _;

use proxmpc::{
    closed_loop_from, initialize, newton_refine, ContinuationConfig, DecisionVector, SimTrace,
};
use nalgebra::DVector;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};

/// Threshold below which an input channel counts as switched off in the
/// sparsity report.
pub const OFF_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initialization failed: {0}")]
    Init(proxmpc::Error),
    #[error("runtime failure: {0}")]
    Runtime(proxmpc::Error),
}

impl RunError {
    /// Process exit code: 1 config, 2 initialization, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Init(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

/// Newton-initializes the plan for the configured system.
///
/// Full steps handle the proximal system directly. The smoothed system's
/// stationarity rows are stiff (slope `w/ε` at the origin) and full steps can
/// cycle from a cold start, so on failure a heavily damped polish runs first
/// and full-step initialization resumes from its iterate.
fn initialize_with_fallback(
    spec: &proxmpc::ProblemSpec,
    x_init: &DVector<f64>,
    cfg: &ContinuationConfig,
) -> Result<proxmpc::ContinuationState, RunError> {
    let z0 = DecisionVector::zeros(spec.dims());
    match initialize(spec, x_init, &z0, cfg) {
        Ok(state) => Ok(state),
        Err(first_failure) => {
            let damped = ContinuationConfig {
                newton_steps: 100 * cfg.init_max_iter,
                newton_step_size: 0.05,
                ..cfg.clone()
            };
            let (z_polished, report) = newton_refine(spec, &z0, x_init, &damped);
            if !report.converged {
                return Err(RunError::Init(first_failure));
            }
            eprintln!(
                "cold-start initialization diverged; recovered with a damped polish ({} iterations)",
                report.iterations
            );
            initialize(spec, x_init, &z_polished, cfg).map_err(RunError::Init)
        }
    }
}

/// Runs one closed-loop experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimTrace, RunError> {
    cfg.validate()?;
    let spec = cfg.to_problem();
    let controller = cfg.to_controller_config();
    let x_init = DVector::from_vec(cfg.x_init.clone());
    let state = initialize_with_fallback(&spec, &x_init, &controller)?;
    closed_loop_from(&spec, None, state, cfg.sim_steps, &controller, cfg.dt)
        .map_err(RunError::Runtime)
}

fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Renders the fixed trace layout:
/// `step, t, x1..xn, u1..um, residual_inf, residual_l1, solver_iters, wall_us`
/// with floats at 17 significant digits.
pub fn render_trace_csv(trace: &SimTrace) -> String {
    let mut out = String::new();
    let (n, m) = match trace.records.first() {
        Some(first) => (first.state.len(), first.input.len()),
        None => (0, 0),
    };
    out.push_str("step,t");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    for i in 1..=m {
        let _ = write!(out, ",u{i}");
    }
    out.push_str(",residual_inf,residual_l1,solver_iters,wall_us\n");
    for record in &trace.records {
        let _ = write!(out, "{},{}", record.step, fmt_float(record.time));
        for value in record.state.iter() {
            let _ = write!(out, ",{}", fmt_float(*value));
        }
        for value in record.input.iter() {
            let _ = write!(out, ",{}", fmt_float(*value));
        }
        let wall_us = (record.wall_seconds * 1e6).round() as u64;
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            fmt_float(record.residual_inf),
            fmt_float(record.residual_l1),
            record.solver_iterations,
            wall_us
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct CompareRecord {
    pub step: usize,
    pub time: f64,
    pub first_l1: f64,
    pub second_l1: f64,
    pub ratio: f64,
}

#[derive(Debug)]
pub struct Comparison {
    pub records: Vec<CompareRecord>,
    /// Median of the per-step ratio over the final half of the run.
    pub median_ratio_final_half: f64,
    pub first: SimTrace,
    pub second: SimTrace,
}

/// Runs two experiments sharing the same plant, horizon, sampling period, and
/// length, and reports the per-step residual 1-norm ratio `first / second`.
pub fn compare_methods(
    first: &ExperimentConfig,
    second: &ExperimentConfig,
) -> Result<Comparison, RunError> {
    let shared = |field: &'static str, same: bool| {
        if same {
            Ok(())
        } else {
            Err(ConfigError::Field {
                field,
                reason: "must match between compared configurations".into(),
            })
        }
    };
    shared("dt", first.dt == second.dt)?;
    shared("horizon", first.horizon == second.horizon)?;
    shared("sim_steps", first.sim_steps == second.sim_steps)?;
    shared("x_init", first.x_init == second.x_init)?;
    shared("reg_weight", first.reg_weight == second.reg_weight)?;

    let trace_first = run_experiment(first)?;
    let trace_second = run_experiment(second)?;

    let records: Vec<CompareRecord> = trace_first
        .records
        .iter()
        .zip(&trace_second.records)
        .map(|(a, b)| CompareRecord {
            step: a.step,
            time: a.time,
            first_l1: a.residual_l1,
            second_l1: b.residual_l1,
            ratio: a.residual_l1 / b.residual_l1,
        })
        .collect();

    let half_time = first.sim_steps as f64 * first.dt / 2.0;
    let mut tail: Vec<f64> = records
        .iter()
        .filter(|r| r.time >= half_time)
        .map(|r| r.ratio)
        .collect();
    tail.sort_by(|a, b| a.partial_cmp(b).expect("ratios are ordered"));
    let median_ratio_final_half = median_of_sorted(&tail);

    Ok(Comparison {
        records,
        median_ratio_final_half,
        first: trace_first,
        second: trace_second,
    })
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// `step, t, res_proposed_l1, res_conventional_l1, ratio`; the first
/// configuration fills the proposed column.
pub fn render_comparison_csv(comparison: &Comparison) -> String {
    let mut out = String::from("step,t,res_proposed_l1,res_conventional_l1,ratio\n");
    for record in &comparison.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            record.step,
            fmt_float(record.time),
            fmt_float(record.first_l1),
            fmt_float(record.second_l1),
            fmt_float(record.ratio)
        );
    }
    out
}

/// Earliest time after which the channel stays within [`OFF_THRESHOLD`] for
/// the rest of the run; `None` if it never switches off.
pub fn switch_off_time(trace: &SimTrace, channel: usize) -> Option<f64> {
    let mut last_active: Option<f64> = None;
    for record in &trace.records {
        if record.input[channel].abs() > OFF_THRESHOLD {
            last_active = Some(record.time);
        }
    }
    match last_active {
        None => trace.records.first().map(|r| r.time),
        Some(t_on) => {
            let t_off = t_on + trace.sample_time;
            if trace.records.last().map(|r| r.time) >= Some(t_off) {
                Some(t_off)
            } else {
                None
            }
        }
    }
}
