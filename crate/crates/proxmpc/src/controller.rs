//! The MPC driver: the per-instant continuation update, Newton refinement and
//! initialization, and the closed sampling loop.
//!
//! At each sampling instant the controller predicts the next initial state
//! `x_pred = f(x_obs, u¹)`, solves
//!
//! ```text
//! (∂F/∂z)(z, x_obs) d = −(∂F/∂x¹)(z, x_obs)(x_pred − x_obs) − ζ_c F(z, x_obs)
//! ```
//!
//! for the update direction, sets `z ← z + d`, and optionally polishes `z`
//! with a few damped Newton iterations on `F(·, x_pred) = 0`. Tracking the
//! root this way costs one (or a few) linear solves per instant instead of a
//! full nonlinear solve.

use std::time::Instant;

use nalgebra::DVector;

use crate::decision::DecisionVector;
use crate::error::{Error, Result};
use crate::jacobian::ResidualLinearization;
use crate::linsolve::{gmres_solve, lu_solve, LinearSolverConfig, SolveMethod};
use crate::ocp::ProblemSpec;
use crate::residual::StationarityForm;

#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    /// Continuation gain ζ_c (per-step residual contraction drive).
    pub zeta_c: f64,
    /// Prox parameter γ of the stationarity row.
    pub gamma: f64,
    /// Newton refinement iterations per sampling instant.
    pub newton_steps: usize,
    /// Damping of the refinement iterations, in (0, 1].
    pub newton_step_size: f64,
    /// Residual tolerance for initialization and refinement early exit.
    pub init_tol: f64,
    /// Iteration cap for initialization.
    pub init_max_iter: usize,
    pub solver: LinearSolverConfig,
    /// Which stationarity row the tracked system uses.
    pub form: StationarityForm,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            zeta_c: 0.4,
            gamma: 0.5,
            // Three refinement iterations keep the applied inputs within the
            // feasibility tolerance through the bound-switching transients; a
            // single iteration overshoots the input bounds by ~1e-2.
            newton_steps: 3,
            newton_step_size: 0.8,
            init_tol: 1e-6,
            init_max_iter: 100,
            solver: LinearSolverConfig::default(),
            form: StationarityForm::Proximal,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta_c > 0.0) {
            return Err(Error::invalid("zeta_c", "must be positive"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        if !(self.newton_step_size > 0.0 && self.newton_step_size <= 1.0) {
            return Err(Error::invalid("newton_step_size", "must lie in (0, 1]"));
        }
        if !(self.init_tol > 0.0) {
            return Err(Error::invalid("init_tol", "must be positive"));
        }
        if self.init_max_iter == 0 {
            return Err(Error::invalid("init_max_iter", "must be at least 1"));
        }
        if let StationarityForm::Smoothed { epsilon } = self.form {
            if !(epsilon > 0.0) {
                return Err(Error::invalid("epsilon", "must be positive"));
            }
        }
        self.solver.validate()
    }
}

/// Persistent solver state across sampling instants.
#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub z: DecisionVector,
    /// The predicted initial state the current `z` is adapted to.
    pub x1: DVector<f64>,
    /// ∞-norm of the residual after the most recent update.
    pub last_residual_norm: f64,
    pub step_count: u64,
}

/// Per-instant diagnostics from [`continuation_step`].
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Residual norms at `(z + d, x_pred)` before Newton refinement.
    pub residual_pre_inf: f64,
    pub residual_pre_l1: f64,
    /// Residual norms at the final iterate and `x_pred`.
    pub residual_post_inf: f64,
    pub residual_post_l1: f64,
    /// Inner linear-solver iterations accumulated over the instant
    /// (0 for the dense direct solver).
    pub solver_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_inf: f64,
    pub converged: bool,
    /// The linearization went singular; the best iterate seen is returned.
    pub singular: bool,
    /// A residual evaluation failed (non-finite); the best iterate is returned.
    pub diverged: bool,
}

pub fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

pub fn norm_l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Solves the linearized system `J d = rhs` with the configured method.
/// Returns the direction and the inner iteration count.
fn solve_direction(
    lin: &ResidualLinearization,
    rhs: &DVector<f64>,
    solver: &LinearSolverConfig,
) -> Result<(DVector<f64>, usize)> {
    match solver.method {
        SolveMethod::DenseLu => {
            let mut jac = lin.jacobian_z_matrix()?;
            if solver.tikhonov > 0.0 {
                for i in 0..jac.nrows() {
                    jac[(i, i)] += solver.tikhonov;
                }
            }
            Ok((lu_solve(&jac, rhs)?, 0))
        }
        SolveMethod::Gmres => {
            let lambda = solver.tikhonov;
            let (d, report) = gmres_solve(
                |v| {
                    let mut av = lin.apply_z(v);
                    if lambda > 0.0 {
                        av.axpy(lambda, v, 1.0);
                    }
                    av
                },
                rhs,
                solver,
            );
            if !d.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "gmres direction",
                    stage: 0,
                });
            }
            Ok((d, report.iterations))
        }
    }
}

/// Internal damped-Newton loop on `F(·, x1) = 0`.
///
/// Tracks the best iterate by residual ∞-norm and returns it if the
/// linearization goes singular or an evaluation diverges.
fn newton_iterate(
    spec: &ProblemSpec,
    z0: &DecisionVector,
    x1: &DVector<f64>,
    cfg: &ContinuationConfig,
    step_size: f64,
    max_iter: usize,
    tol: f64,
) -> (DecisionVector, NewtonReport, usize) {
    let mut z = z0.clone();
    let mut best_z = z.clone();
    let mut best_norm = f64::INFINITY;
    let mut solver_iters = 0usize;
    let mut iterations = 0usize;

    let report = |iterations, best_norm, converged, singular, diverged| NewtonReport {
        iterations,
        residual_inf: best_norm,
        converged,
        singular,
        diverged,
    };

    loop {
        let f = match crate::residual::residual_with_form(spec, &z, x1, cfg.gamma, cfg.form) {
            Ok(f) => f,
            Err(_) => {
                return (
                    best_z,
                    report(iterations, best_norm, false, false, true),
                    solver_iters,
                );
            }
        };
        let f_inf = norm_inf(&f);
        if !f_inf.is_finite() {
            return (
                best_z,
                report(iterations, best_norm, false, false, true),
                solver_iters,
            );
        }
        if f_inf < best_norm {
            best_norm = f_inf;
            best_z = z.clone();
        }
        if f_inf <= tol {
            return (
                best_z,
                report(iterations, best_norm, true, false, false),
                solver_iters,
            );
        }
        if iterations >= max_iter {
            return (
                best_z,
                report(iterations, best_norm, false, false, false),
                solver_iters,
            );
        }

        let step = ResidualLinearization::new(spec, &z, x1, cfg.gamma, cfg.form)
            .map_err(|_| ())
            .and_then(|lin| {
                solve_direction(&lin, &(-&f), &cfg.solver).map_err(|_| ())
            });
        match step {
            Ok((d, iters)) => {
                solver_iters += iters;
                let step = d.scale(step_size);
                // infallible: direction length equals z length by construction
                z.add_assign(&step).expect("direction length");
            }
            Err(()) => {
                return (
                    best_z,
                    report(iterations, best_norm, false, true, false),
                    solver_iters,
                );
            }
        }
        iterations += 1;
    }
}

/// Damped Newton refinement of `z` on `F(·, x¹) = 0`, using
/// `cfg.newton_steps` iterations of size `cfg.newton_step_size` (early exit
/// below `cfg.init_tol`).
pub fn newton_refine(
    spec: &ProblemSpec,
    z: &DecisionVector,
    x1: &DVector<f64>,
    cfg: &ContinuationConfig,
) -> (DecisionVector, NewtonReport) {
    let (z_out, report, _) = newton_iterate(
        spec,
        z,
        x1,
        cfg,
        cfg.newton_step_size,
        cfg.newton_steps,
        cfg.init_tol,
    );
    (z_out, report)
}

/// Full-step Newton initialization from `z0` (conventionally zero):
/// iterates until `‖F‖∞ ≤ cfg.init_tol` or `cfg.init_max_iter` iterations.
pub fn initialize(
    spec: &ProblemSpec,
    x1: &DVector<f64>,
    z0: &DecisionVector,
    cfg: &ContinuationConfig,
) -> Result<ContinuationState> {
    cfg.validate()?;
    if x1.len() != spec.state_dim() {
        return Err(Error::dimension("initial state", spec.state_dim(), x1.len()));
    }
    let (z, report, _) = newton_iterate(spec, z0, x1, cfg, 1.0, cfg.init_max_iter, cfg.init_tol);
    if !report.converged {
        return Err(Error::InitializationFailed {
            residual: report.residual_inf,
            iterations: report.iterations,
        });
    }
    Ok(ContinuationState {
        z,
        x1: x1.clone(),
        last_residual_norm: report.residual_inf,
        step_count: 0,
    })
}

/// One sampling instant of the tracking controller.
///
/// On a singular linearization the step is abandoned with an error and the
/// caller keeps the previous state.
pub fn continuation_step(
    spec: &ProblemSpec,
    state: &ContinuationState,
    x_obs: &DVector<f64>,
    cfg: &ContinuationConfig,
) -> Result<(ContinuationState, StepReport)> {
    if x_obs.len() != spec.state_dim() {
        return Err(Error::dimension("observed state", spec.state_dim(), x_obs.len()));
    }
    let u1 = state.z.u(1).clone_owned();
    let x_pred = spec.dynamics(x_obs, &u1);
    if !x_pred.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "state prediction",
            stage: 0,
        });
    }

    let lin = ResidualLinearization::new(spec, &state.z, x_obs, cfg.gamma, cfg.form)?;
    let f_obs = lin.base_residual();
    let dx = &x_pred - x_obs;
    let rhs = -lin.apply_x1(&dx) - f_obs.scale(cfg.zeta_c);
    let (d_c, mut solver_iterations) = solve_direction(&lin, &rhs, &cfg.solver)?;

    let mut z = state.z.clone();
    z.add_assign(&d_c)?;

    // residual at (z + d_c, x_pred): the pre-refinement sample
    let pre =
        crate::residual::residual_with_form(spec, &z, &x_pred, cfg.gamma, cfg.form)?;
    let residual_pre_inf = norm_inf(&pre);
    let residual_pre_l1 = norm_l1(&pre);

    let z_final = if cfg.newton_steps > 0 {
        let (z_ref, report, iters) = newton_iterate(
            spec,
            &z,
            &x_pred,
            cfg,
            cfg.newton_step_size,
            cfg.newton_steps,
            cfg.init_tol,
        );
        solver_iterations += iters;
        if report.singular {
            return Err(Error::Singular { pivot: 0 });
        }
        if report.diverged {
            return Err(Error::NonFinite {
                context: "newton refinement",
                stage: 0,
            });
        }
        z_ref
    } else {
        z
    };

    let post =
        crate::residual::residual_with_form(spec, &z_final, &x_pred, cfg.gamma, cfg.form)?;
    let residual_post_inf = norm_inf(&post);
    let residual_post_l1 = norm_l1(&post);

    Ok((
        ContinuationState {
            z: z_final,
            x1: x_pred,
            last_residual_norm: residual_post_inf,
            step_count: state.step_count + 1,
        },
        StepReport {
            residual_pre_inf,
            residual_pre_l1,
            residual_post_inf,
            residual_post_l1,
            solver_iterations,
        },
    ))
}

/// One record per sampling instant of a closed-loop run.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    /// `step · sample_time`, seconds.
    pub time: f64,
    /// State observed at the start of the instant.
    pub state: DVector<f64>,
    /// Input applied over the instant (the first input block of `z`).
    pub input: DVector<f64>,
    /// Post-refinement residual norms (the values used for reporting).
    pub residual_inf: f64,
    pub residual_l1: f64,
    /// Residual norms sampled before the Newton refinement.
    pub residual_pre_inf: f64,
    pub residual_pre_l1: f64,
    pub solver_iterations: usize,
    pub wall_seconds: f64,
    /// The update failed this instant and the plan was held.
    pub step_failed: bool,
}

/// Time-indexed record of a closed-loop simulation.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub records: Vec<StepRecord>,
    /// Plant state after the final applied input, i.e. at
    /// `t = steps · sample_time`.
    pub final_state: DVector<f64>,
    pub sample_time: f64,
}

/// Plant dynamics used by the closed loop; defaults to the problem's own
/// dynamics (no plant-model mismatch).
pub type PlantFn<'a> = &'a (dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Sync);

/// Initializes from `z = 0` and runs [`closed_loop_from`].
pub fn closed_loop(
    spec: &ProblemSpec,
    plant: Option<PlantFn<'_>>,
    x_init: &DVector<f64>,
    steps: usize,
    cfg: &ContinuationConfig,
    sample_time: f64,
) -> Result<SimTrace> {
    let z0 = DecisionVector::zeros(spec.dims());
    let state = initialize(spec, x_init, &z0, cfg)?;
    closed_loop_from(spec, plant, state, steps, cfg, sample_time)
}

/// Runs the sampling loop from an initialized state.
///
/// Per instant: the first input block of `z` is applied to the plant, the
/// observed state feeds the continuation update, and a record is logged.
/// Step-level solver failures are logged and the loop continues with the
/// previous plan held (the same input stays applied); a non-finite plant
/// state aborts the run.
pub fn closed_loop_from(
    spec: &ProblemSpec,
    plant: Option<PlantFn<'_>>,
    mut state: ContinuationState,
    steps: usize,
    cfg: &ContinuationConfig,
    sample_time: f64,
) -> Result<SimTrace> {
    cfg.validate()?;
    if !(sample_time > 0.0) {
        return Err(Error::invalid("sample_time", "must be positive"));
    }
    let mut x = state.x1.clone();
    let mut records = Vec::with_capacity(steps);

    for step in 0..steps {
        let started = Instant::now();
        let u = state.z.u(1).clone_owned();

        let mut record = StepRecord {
            step,
            time: step as f64 * sample_time,
            state: x.clone(),
            input: u.clone(),
            residual_inf: f64::NAN,
            residual_l1: f64::NAN,
            residual_pre_inf: f64::NAN,
            residual_pre_l1: f64::NAN,
            solver_iterations: 0,
            wall_seconds: 0.0,
            step_failed: false,
        };

        match continuation_step(spec, &state, &x, cfg) {
            Ok((next, report)) => {
                state = next;
                record.residual_inf = report.residual_post_inf;
                record.residual_l1 = report.residual_post_l1;
                record.residual_pre_inf = report.residual_pre_inf;
                record.residual_pre_l1 = report.residual_pre_l1;
                record.solver_iterations = report.solver_iterations;
            }
            Err(err) => {
                eprintln!("step {step}: update failed ({err}); holding previous plan");
                record.step_failed = true;
            }
        }
        record.wall_seconds = started.elapsed().as_secs_f64();

        x = match plant {
            Some(f) => f(&x, &u),
            None => spec.dynamics(&x, &u),
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "plant",
                stage: step + 1,
            });
        }
        records.push(record);
    }

    Ok(SimTrace {
        records,
        final_state: x,
        sample_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::example_plant;
    use nalgebra::dvector;

    #[test]
    fn stationary_fixed_point_leaves_z_unchanged() {
        let spec = example_plant();
        let cfg = ContinuationConfig::default();
        let state = ContinuationState {
            z: DecisionVector::zeros(spec.dims()),
            x1: DVector::zeros(5),
            last_residual_norm: 0.0,
            step_count: 0,
        };
        let (next, report) = continuation_step(&spec, &state, &DVector::zeros(5), &cfg).unwrap();
        assert_eq!(next.z.as_vector().amax(), 0.0);
        assert_eq!(report.residual_post_inf, 0.0);
    }

    #[test]
    fn closed_loop_at_origin_stays_at_origin() {
        let spec = example_plant();
        let cfg = ContinuationConfig::default();
        let trace = closed_loop(&spec, None, &DVector::zeros(5), 10, &cfg, 0.05).unwrap();
        assert_eq!(trace.records.len(), 10);
        for record in &trace.records {
            assert_eq!(record.input.amax(), 0.0);
            assert_eq!(record.state.amax(), 0.0);
        }
        assert_eq!(trace.final_state.amax(), 0.0);
    }

    #[test]
    fn infeasible_problem_fails_initialization() {
        // h(u) = u - 2 cannot hold together with the bound u <= 1.
        use nalgebra::DMatrix;
        let spec = crate::ocp::ProblemSpec::builder(1, 1, 2)
            .dynamics(
                |x, u| dvector![0.5 * x[0] + u[0]],
                |_, _| DMatrix::from_element(1, 1, 0.5),
                |_, _| DMatrix::identity(1, 1),
            )
            .stage_cost(
                |x, u| 0.5 * x[0] * x[0] + 0.5 * u[0] * u[0],
                |x, _| x.clone(),
                |_, u| u.clone(),
            )
            .inequality(
                1,
                |u| dvector![u[0] - 1.0],
                |_| DMatrix::from_element(1, 1, 1.0),
            )
            .equality(
                1,
                |u| dvector![u[0] - 2.0],
                |_| DMatrix::from_element(1, 1, 1.0),
            )
            .build()
            .unwrap();
        let cfg = ContinuationConfig {
            init_max_iter: 30,
            ..Default::default()
        };
        let z0 = DecisionVector::zeros(spec.dims());
        let err = initialize(&spec, &dvector![1.0], &z0, &cfg);
        assert!(matches!(err, Err(Error::InitializationFailed { .. })));
    }

    #[test]
    fn config_validation_bounds() {
        let mut cfg = ContinuationConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.newton_step_size = 0.0;
        assert!(cfg.validate().is_err());
        cfg.newton_step_size = 1.5;
        assert!(cfg.validate().is_err());
        cfg.newton_step_size = 1.0;
        cfg.zeta_c = -0.1;
        assert!(cfg.validate().is_err());
    }
}
