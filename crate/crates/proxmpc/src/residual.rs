//! Assembly of the stage-blocked optimality residual.
//!
//! For each stage `k` the residual block is
//!
//! ```text
//! [ u^k − prox_γ^r(u^k − γ J^k)      ]   input stationarity
//! [ ψ(−g(u^k), μ^k)                  ]   complementarity (Fischer–Burmeister)
//! [ h(u^k)                           ]   equality feasibility
//! ```
//!
//! where `J^k = ∇ᵤH(x^k, u^k, μ^k, ν^k, p^{k+1})` and the states/costates are
//! the trajectory induced by `(z, x¹)`. The stack over `k = 1, …, T` is the
//! equation system whose root the continuation controller tracks.
//!
//! A smoothed variant replaces the prox row with `∇r̃(u^k) + J^k`, where the
//! scaled ℓ₁ norm `w‖u‖₁` is approximated by `w ε Σᵢ log cosh(uᵢ/ε)`; it is
//! retained for comparison experiments.

use nalgebra::{DMatrix, DVector};

use crate::decision::DecisionVector;
use crate::error::{Error, Result};
use crate::ncp::psi;
use crate::ocp::{hamiltonian_grad_u, ProblemSpec, TrajectoryPair};
use crate::prox::{prox_eval, Regularizer};

/// How the input-stationarity row of each stage block is written.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationarityForm {
    /// `u − prox_γ^r(u − γJ)`; exact for nonsmooth regularizers.
    Proximal,
    /// `∇r̃(u) + J` with the log-cosh smoothing of the ℓ₁ term.
    Smoothed { epsilon: f64 },
}

/// `∇r̃(u)` for the smoothed form: elementwise `w · tanh(uᵢ/ε)`.
/// Supported for `ScaledL1` (and trivially for `Zero`, where it vanishes).
pub(crate) fn smoothed_reg_grad(
    reg: &Regularizer,
    u: &DVector<f64>,
    epsilon: f64,
) -> Result<DVector<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    match reg {
        Regularizer::ScaledL1 { weight } => {
            let w = *weight;
            Ok(u.map(|ui| w * (ui / epsilon).tanh()))
        }
        Regularizer::Zero => Ok(DVector::zeros(u.len())),
        Regularizer::Custom { .. } => Err(Error::Capability {
            capability: "smoothed gradient (scaled-l1 regularizer required)",
        }),
    }
}

fn stationarity_row(
    spec: &ProblemSpec,
    u: &DVector<f64>,
    j_vec: &DVector<f64>,
    gamma: f64,
    form: StationarityForm,
) -> Result<DVector<f64>> {
    match form {
        StationarityForm::Proximal => {
            let arg = u - j_vec.scale(gamma);
            Ok(u - prox_eval(spec.regularizer(), &arg, gamma)?)
        }
        StationarityForm::Smoothed { epsilon } => {
            Ok(smoothed_reg_grad(spec.regularizer(), u, epsilon)? + j_vec)
        }
    }
}

fn stage_rows(
    spec: &ProblemSpec,
    k: usize,
    z: &DecisionVector,
    traj: &TrajectoryPair,
    gamma: f64,
    form: StationarityForm,
) -> Result<DVector<f64>> {
    let dims = spec.dims();
    assert!(k >= 1 && k <= dims.horizon, "stage index out of range");
    let u = z.u(k).clone_owned();
    let mu = z.mu(k).clone_owned();
    let nu = z.nu(k).clone_owned();
    let x = traj.state(k);
    let p_next = traj.costate(k + 1);

    let j_vec = hamiltonian_grad_u(spec, x, &u, &mu, &nu, p_next);
    let top = stationarity_row(spec, &u, &j_vec, gamma, form)?;

    let mut rows = DVector::zeros(dims.stage_len());
    rows.rows_mut(0, dims.inputs).copy_from(&top);
    if dims.ineq > 0 {
        let comp = psi(&(-spec.ineq(&u)), &mu)?;
        rows.rows_mut(dims.inputs, dims.ineq).copy_from(&comp);
    }
    if dims.eq > 0 {
        rows.rows_mut(dims.inputs + dims.ineq, dims.eq)
            .copy_from(&spec.eq(&u));
    }
    Ok(rows)
}

/// Residual block of stage `k` (1-based) with the proximal stationarity row.
pub fn stage_residual(
    spec: &ProblemSpec,
    k: usize,
    z: &DecisionVector,
    traj: &TrajectoryPair,
    gamma: f64,
) -> Result<DVector<f64>> {
    stage_rows(spec, k, z, traj, gamma, StationarityForm::Proximal)
}

/// Residual block of stage `k` with the smoothed stationarity row.
pub fn smoothed_stage_residual(
    spec: &ProblemSpec,
    k: usize,
    z: &DecisionVector,
    traj: &TrajectoryPair,
    epsilon: f64,
) -> Result<DVector<f64>> {
    // gamma is unused by the smoothed row; pass a harmless value
    stage_rows(spec, k, z, traj, 1.0, StationarityForm::Smoothed { epsilon })
}

/// Full stage-blocked residual `F(z, x¹)` with a selectable stationarity row.
/// Runs the rollout and costate passes internally.
pub fn residual_with_form(
    spec: &ProblemSpec,
    z: &DecisionVector,
    x1: &DVector<f64>,
    gamma: f64,
    form: StationarityForm,
) -> Result<DVector<f64>> {
    let dims = spec.dims();
    let traj = TrajectoryPair::compute(spec, x1, z)?;
    let mut out = DVector::zeros(dims.total_len());
    let stage_len = dims.stage_len();
    for k in 1..=dims.horizon {
        let rows = stage_rows(spec, k, z, &traj, gamma, form)?;
        out.rows_mut((k - 1) * stage_len, stage_len).copy_from(&rows);
    }
    Ok(out)
}

/// Full residual `F(z, x¹)` with the proximal stationarity row.
pub fn residual(
    spec: &ProblemSpec,
    z: &DecisionVector,
    x1: &DVector<f64>,
    gamma: f64,
) -> Result<DVector<f64>> {
    residual_with_form(spec, z, x1, gamma, StationarityForm::Proximal)
}

/// Outcome of [`licq_check`].
#[derive(Debug, Clone)]
pub struct LicqReport {
    /// Indices of inequality constraints counted active, `{i : |g_i(u)| ≤ tol}`.
    pub active_set: Vec<usize>,
    /// Whether the stacked active-constraint Jacobian has full row rank.
    pub full_row_rank: bool,
    /// `(σ_min, σ_max)` of the stacked Jacobian when it has rows.
    pub singular_values: Option<(f64, f64)>,
}

/// Diagnostic rank check of `[∂g_active/∂u; ∂h/∂u]` at `u`.
///
/// Full row rank is declared when the smallest singular value exceeds
/// `tol · (1 + σ_max)`. More active rows than input dimensions is an
/// immediate failure. Never gates the solve.
pub fn licq_check(spec: &ProblemSpec, u: &DVector<f64>, tol: f64) -> LicqReport {
    let g = spec.ineq(u);
    let active_set: Vec<usize> = (0..spec.ineq_count())
        .filter(|&i| g[i].abs() <= tol)
        .collect();
    let rows = active_set.len() + spec.eq_count();
    if rows == 0 {
        return LicqReport {
            active_set,
            full_row_rank: true,
            singular_values: None,
        };
    }
    if rows > spec.input_dim() {
        return LicqReport {
            active_set,
            full_row_rank: false,
            singular_values: None,
        };
    }

    let g_jac = spec.ineq_jac(u);
    let h_jac = spec.eq_jac(u);
    let mut jac = DMatrix::zeros(rows, spec.input_dim());
    for (row, &i) in active_set.iter().enumerate() {
        jac.row_mut(row).copy_from(&g_jac.row(i));
    }
    for i in 0..spec.eq_count() {
        jac.row_mut(active_set.len() + i).copy_from(&h_jac.row(i));
    }

    let svals = jac.svd(false, false).singular_values;
    let sigma_max = svals.max();
    let sigma_min = svals.min();
    LicqReport {
        active_set,
        full_row_rank: sigma_min > tol * (1.0 + sigma_max),
        singular_values: Some((sigma_min, sigma_max)),
    }
}
