//! Nonsmooth model predictive control by continuation.
//!
//! The first-order optimality conditions of an optimal control problem with a
//! prox-friendly nonsmooth input regularizer (scaled ℓ₁ for sparse actuation)
//! are rewritten, via the proximal operator and a complementarity function,
//! into an equation system `F(z, x¹) = 0` in the stacked inputs and
//! multipliers. A controller then tracks the root across sampling instants by
//! solving one linear system per instant, optionally polished by damped
//! Newton steps; no nonlinear program is solved online.
//!
//! Module map:
//! * [`prox`]: proximal operators, subdifferential tests, generalized prox
//!   derivatives;
//! * [`ncp`]: Fischer–Burmeister complementarity rows;
//! * [`decision`]: the stage-blocked decision vector;
//! * [`ocp`]: problem definition, rollout and costate passes;
//! * [`mod@residual`]: the stage-blocked residual, its smoothed variant, and the
//!   constraint-qualification diagnostic;
//! * [`jacobian`]: analytic linearization and finite-difference oracles;
//! * [`linsolve`]: dense LU and restarted GMRES;
//! * [`controller`]: the continuation update, initialization, and the closed
//!   sampling loop;
//! * [`benchmark`]: the bundled five-state sparse-actuation benchmark.

pub mod benchmark;
pub mod controller;
pub mod decision;
pub mod error;
pub mod jacobian;
pub mod linsolve;
pub mod ncp;
pub mod ocp;
pub mod prox;
pub mod residual;

pub use controller::{
    closed_loop, closed_loop_from, continuation_step, initialize, newton_refine,
    ContinuationConfig, ContinuationState, NewtonReport, SimTrace, StepRecord, StepReport,
};
pub use decision::{DecisionVector, StageDims};
pub use error::{Error, Result};
pub use jacobian::{jacobian_x1, jacobian_z, JacobianMode, ResidualLinearization};
pub use linsolve::{gmres_solve, lu_solve, GmresReport, LinearSolverConfig, SolveMethod};
pub use ncp::{ncp_eval, ncp_partials, psi, NcpFunction};
pub use ocp::{costates, hamiltonian_grad_u, rollout, ProblemSpec, TrajectoryPair};
pub use prox::{
    prox_eval, prox_generalized_jacobian, soft_threshold, subgradient_contains,
    subgradient_contains_with_tol, Regularizer,
};
pub use residual::{
    licq_check, residual, residual_with_form, smoothed_stage_residual, stage_residual,
    LicqReport, StationarityForm,
};
