//! Generalized Jacobians of the residual system with respect to the decision
//! vector and the initial state.
//!
//! The residual couples stages through two recursions: states propagate
//! forward, costates backward. A directional derivative of the residual is
//! therefore assembled in three passes:
//!
//! 1. forward state sensitivities `δx^{k+1} = A^k δx^k + B^k δu^k`,
//! 2. backward costate sensitivities
//!    `δp^k = (Lxx + Pxx) δx^k + (Lxu + Pxu) δu^k + A^kᵀ δp^{k+1}` seeded with
//!    `δp^{T+1} = Φxx δx^{T+1}`,
//! 3. per-stage rows: the stationarity row through the generalized prox
//!    derivative (or the smoothed slope), complementarity rows through the
//!    Fischer–Burmeister partials, equality rows through `∂h/∂u`.
//!
//! The first-order factors (`A`, `B`, constraint Jacobians, prox and NCP
//! derivative selections) are analytic. The second-order contractions that the
//! costate and stationarity recursions need (`Lxx`, `∂(Aᵀp)/∂x`, `Φxx`, …) are
//! formed once per stage by central differences of the analytic
//! first-derivative callbacks, so the resulting operator is an exactly linear
//! map and deterministic at kinks and complementarity corners, where a plain
//! finite difference of the residual is unreliable. The whole-residual
//! forward-difference mode is kept as an independent oracle and fallback.

use nalgebra::{DMatrix, DVector};

use crate::decision::DecisionVector;
use crate::error::{Error, Result};
use crate::ncp::ncp_partials;
use crate::ocp::{hamiltonian_grad_u, ProblemSpec, TrajectoryPair};
use crate::prox::{prox_generalized_jacobian, Regularizer};
use crate::residual::{residual_with_form, StationarityForm};

/// Step factor for the central differences that form the per-stage
/// second-order blocks. Scaled by `1 + ‖base point‖∞`; the blocks are exact up
/// to ~1e-12 for quadratic data and ~1e-9 for generic smooth data.
const SECOND_ORDER_FD_STEP: f64 = 1e-4;

/// How a Jacobian is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianMode {
    /// Chain rule through the sensitivity recursions (default).
    Analytic,
    /// Forward differences of the full residual, column `j` with step
    /// `fd_step · (1 + |z_j|)`. Oracle and fallback.
    FiniteDifference { fd_step: f64 },
}

struct StageData {
    u: DVector<f64>,
    g_vals: DVector<f64>,
    /// `A^k = ∂f/∂x(x^k, u^k)`
    a: DMatrix<f64>,
    a_t: DMatrix<f64>,
    /// `B^k = ∂f/∂u(x^k, u^k)`
    b: DMatrix<f64>,
    b_t: DMatrix<f64>,
    g_jac: DMatrix<f64>,
    g_jac_t: DMatrix<f64>,
    h_jac: DMatrix<f64>,
    h_jac_t: DMatrix<f64>,
    j_vec: DVector<f64>,
    /// Stationarity-row slope: the generalized prox derivative diagonal for
    /// the proximal form, or the smoothed-gradient slope for the smoothed
    /// form.
    slope: DVector<f64>,
    /// Fischer–Burmeister partials at `(−g_i(u^k), μ^k_i)`.
    psi_da: DVector<f64>,
    psi_db: DVector<f64>,
    /// Costate-recursion blocks:
    /// `px = ∂(∇ₓL)/∂x + ∂(Aᵀp^{k+1})/∂x`, `pu` likewise over `u`.
    px: DMatrix<f64>,
    pu: DMatrix<f64>,
    /// Stationarity-gradient blocks:
    /// `jx = ∂(∇ᵤL)/∂x + ∂(Bᵀp^{k+1})/∂x`,
    /// `ju = ∂(∇ᵤL)/∂u + ∂(Bᵀp^{k+1})/∂u + ∂(Gᵀμ)/∂u + ∂(Hᵀν)/∂u`.
    jx: DMatrix<f64>,
    ju: DMatrix<f64>,
}

/// Linearization of the residual at a base point `(z, x¹)`.
///
/// Provides exactly linear operators `δz ↦ (∂F/∂z) δz` and
/// `δx¹ ↦ (∂F/∂x¹) δx¹`, plus dense assemblies of both matrices. The base
/// residual comes along for free and is reused by the controller.
pub struct ResidualLinearization {
    form: StationarityForm,
    gamma: f64,
    stage_len: usize,
    n: usize,
    m: usize,
    n_i: usize,
    n_e: usize,
    horizon: usize,
    stages: Vec<StageData>,
    /// `∂(∇φ)/∂x` at `x^{T+1}`.
    phi_xx: DMatrix<f64>,
    base_residual: DVector<f64>,
}

impl ResidualLinearization {
    pub fn new(
        spec: &ProblemSpec,
        z: &DecisionVector,
        x1: &DVector<f64>,
        gamma: f64,
        form: StationarityForm,
    ) -> Result<Self> {
        let dims = spec.dims();
        if z.dims() != dims {
            return Err(Error::dimension(
                "decision vector",
                dims.total_len(),
                z.len(),
            ));
        }
        let traj = TrajectoryPair::compute(spec, x1, z)?;
        let (n, m) = (spec.state_dim(), spec.input_dim());
        let t = dims.horizon;

        let mut stages = Vec::with_capacity(t);
        let mut base_residual = DVector::zeros(dims.total_len());

        for k in 1..=t {
            let x = traj.state(k).clone();
            let u = z.u(k).clone_owned();
            let mu = z.mu(k).clone_owned();
            let nu = z.nu(k).clone_owned();
            let p_next = traj.costate(k + 1).clone();

            let a = spec.dynamics_jac_x(&x, &u);
            let b = spec.dynamics_jac_u(&x, &u);
            let g_vals = spec.ineq(&u);
            let g_jac = spec.ineq_jac(&u);
            let h_jac = spec.eq_jac(&u);
            let j_vec = hamiltonian_grad_u(spec, &x, &u, &mu, &nu, &p_next);

            let slope = match form {
                StationarityForm::Proximal => {
                    let arg = &u - j_vec.scale(gamma);
                    prox_generalized_jacobian(spec.regularizer(), &arg, gamma)?
                }
                StationarityForm::Smoothed { epsilon } => {
                    smoothed_slope(spec.regularizer(), &u, epsilon)?
                }
            };

            let mut psi_da = DVector::zeros(dims.ineq);
            let mut psi_db = DVector::zeros(dims.ineq);
            for i in 0..dims.ineq {
                let (da, db) = ncp_partials(-g_vals[i], mu[i]);
                psi_da[i] = da;
                psi_db[i] = db;
            }

            let h = SECOND_ORDER_FD_STEP * (1.0 + x.amax().max(u.amax()));

            let lxx = diff_wrt_x(|xx| spec.stage_cost_grad_x(xx, &u), &x, n, h);
            let lxu = diff_wrt_u(|uu| spec.stage_cost_grad_x(&x, uu), &u, n, h);
            let lux = diff_wrt_x(|xx| spec.stage_cost_grad_u(xx, &u), &x, m, h);
            let luu = diff_wrt_u(|uu| spec.stage_cost_grad_u(&x, uu), &u, m, h);
            let atp_x = diff_wrt_x(|xx| spec.dynamics_jac_x(xx, &u).transpose() * &p_next, &x, n, h);
            let atp_u = diff_wrt_u(|uu| spec.dynamics_jac_x(&x, uu).transpose() * &p_next, &u, n, h);
            let btp_x = diff_wrt_x(|xx| spec.dynamics_jac_u(xx, &u).transpose() * &p_next, &x, m, h);
            let btp_u = diff_wrt_u(|uu| spec.dynamics_jac_u(&x, uu).transpose() * &p_next, &u, m, h);
            let mut ju = luu + btp_u;
            if dims.ineq > 0 {
                ju += diff_wrt_u(|uu| spec.ineq_jac(uu).transpose() * &mu, &u, m, h);
            }
            if dims.eq > 0 {
                ju += diff_wrt_u(|uu| spec.eq_jac(uu).transpose() * &nu, &u, m, h);
            }
            let px = lxx + atp_x;
            let pu = lxu + atp_u;
            let jx = lux + btp_x;

            // base residual rows for this stage
            let offset = (k - 1) * dims.stage_len();
            let top = match form {
                StationarityForm::Proximal => {
                    let arg = &u - j_vec.scale(gamma);
                    &u - crate::prox::prox_eval(spec.regularizer(), &arg, gamma)?
                }
                StationarityForm::Smoothed { epsilon } => {
                    crate::residual::smoothed_reg_grad(spec.regularizer(), &u, epsilon)? + &j_vec
                }
            };
            base_residual.rows_mut(offset, m).copy_from(&top);
            for i in 0..dims.ineq {
                base_residual[offset + m + i] = crate::ncp::ncp_eval(-g_vals[i], mu[i]);
            }
            if dims.eq > 0 {
                base_residual
                    .rows_mut(offset + m + dims.ineq, dims.eq)
                    .copy_from(&spec.eq(&u));
            }

            stages.push(StageData {
                u,
                g_vals,
                a_t: a.transpose(),
                a,
                b_t: b.transpose(),
                b,
                g_jac_t: g_jac.transpose(),
                g_jac,
                h_jac_t: h_jac.transpose(),
                h_jac,
                j_vec,
                slope,
                psi_da,
                psi_db,
                px,
                pu,
                jx,
                ju,
            });
        }

        let x_terminal = traj.state(t + 1).clone();
        let h_term = SECOND_ORDER_FD_STEP * (1.0 + x_terminal.amax());
        let phi_xx = diff_wrt_x(|xx| spec.terminal_cost_grad(xx), &x_terminal, n, h_term);

        Ok(ResidualLinearization {
            form,
            gamma,
            stage_len: dims.stage_len(),
            n,
            m,
            n_i: dims.ineq,
            n_e: dims.eq,
            horizon: t,
            stages,
            phi_xx,
            base_residual,
        })
    }

    pub fn base_residual(&self) -> &DVector<f64> {
        &self.base_residual
    }

    /// The Hamiltonian input gradients `J^k` at the base point, stage-stacked.
    pub fn stationarity_gradients(&self) -> Vec<DVector<f64>> {
        self.stages.iter().map(|s| s.j_vec.clone()).collect()
    }

    /// `(∂F/∂z) δz`.
    pub fn apply_z(&self, dz: &DVector<f64>) -> DVector<f64> {
        assert_eq!(dz.len(), self.horizon * self.stage_len);
        let du: Vec<DVector<f64>> = (0..self.horizon)
            .map(|idx| dz.rows(idx * self.stage_len, self.m).clone_owned())
            .collect();
        let dmu: Vec<DVector<f64>> = (0..self.horizon)
            .map(|idx| {
                dz.rows(idx * self.stage_len + self.m, self.n_i).clone_owned()
            })
            .collect();
        let dnu: Vec<DVector<f64>> = (0..self.horizon)
            .map(|idx| {
                dz.rows(idx * self.stage_len + self.m + self.n_i, self.n_e)
                    .clone_owned()
            })
            .collect();
        self.apply(&DVector::zeros(self.n), &du, &dmu, &dnu)
    }

    /// `(∂F/∂x¹) δx¹`.
    pub fn apply_x1(&self, dx1: &DVector<f64>) -> DVector<f64> {
        assert_eq!(dx1.len(), self.n);
        let zero_u = vec![DVector::zeros(self.m); self.horizon];
        let zero_mu = vec![DVector::zeros(self.n_i); self.horizon];
        let zero_nu = vec![DVector::zeros(self.n_e); self.horizon];
        self.apply(dx1, &zero_u, &zero_mu, &zero_nu)
    }

    fn apply(
        &self,
        dx1: &DVector<f64>,
        du: &[DVector<f64>],
        dmu: &[DVector<f64>],
        dnu: &[DVector<f64>],
    ) -> DVector<f64> {
        let t = self.horizon;

        // forward: dx[idx] = δx^{idx+1}
        let mut dx = Vec::with_capacity(t + 1);
        dx.push(dx1.clone());
        for (idx, stage) in self.stages.iter().enumerate() {
            let mut next = &stage.a * &dx[idx];
            next.gemv(1.0, &stage.b, &du[idx], 1.0);
            dx.push(next);
        }

        // backward: dp[idx] = δp^{idx+2}
        let mut dp = vec![DVector::zeros(self.n); t];
        dp[t - 1] = &self.phi_xx * &dx[t];
        for idx in (0..t.saturating_sub(1)).rev() {
            // δp^{k} for k = idx + 2 uses the data of stage k (stages[idx + 1])
            let stage = &self.stages[idx + 1];
            let mut p = &stage.a_t * &dp[idx + 1];
            p.gemv(1.0, &stage.px, &dx[idx + 1], 1.0);
            p.gemv(1.0, &stage.pu, &du[idx + 1], 1.0);
            dp[idx] = p;
        }

        let mut out = DVector::zeros(t * self.stage_len);
        for (idx, stage) in self.stages.iter().enumerate() {
            let mut dj = &stage.jx * &dx[idx];
            dj.gemv(1.0, &stage.ju, &du[idx], 1.0);
            if self.n_i > 0 {
                dj.gemv(1.0, &stage.g_jac_t, &dmu[idx], 1.0);
            }
            if self.n_e > 0 {
                dj.gemv(1.0, &stage.h_jac_t, &dnu[idx], 1.0);
            }
            dj.gemv(1.0, &stage.b_t, &dp[idx], 1.0);

            self.fill_stage_rows(&mut out, idx, stage, &du[idx], &dmu[idx], &dj);
        }
        out
    }

    /// Writes the linearized stage rows into `out` given the stage direction
    /// blocks and the stationarity-gradient direction `dj`.
    fn fill_stage_rows(
        &self,
        out: &mut DVector<f64>,
        idx: usize,
        stage: &StageData,
        du: &DVector<f64>,
        dmu: &DVector<f64>,
        dj: &DVector<f64>,
    ) {
        let offset = idx * self.stage_len;
        match self.form {
            StationarityForm::Proximal => {
                // δ(u − prox(u − γJ)) = δu − D (δu − γ δJ)
                for i in 0..self.m {
                    out[offset + i] = du[i] - stage.slope[i] * (du[i] - self.gamma * dj[i]);
                }
            }
            StationarityForm::Smoothed { .. } => {
                for i in 0..self.m {
                    out[offset + i] = stage.slope[i] * du[i] + dj[i];
                }
            }
        }
        if self.n_i > 0 {
            let dg = &stage.g_jac * du;
            for i in 0..self.n_i {
                out[offset + self.m + i] = stage.psi_da[i] * (-dg[i]) + stage.psi_db[i] * dmu[i];
            }
        }
        if self.n_e > 0 {
            let dh = &stage.h_jac * du;
            for i in 0..self.n_e {
                out[offset + self.m + self.n_i + i] = dh[i];
            }
        }
    }

    /// Dense `∂F/∂z`, assembled column by column.
    ///
    /// Multiplier columns are local to their stage block; input columns run
    /// the two recursions with the structurally-zero prefix skipped.
    pub fn jacobian_z_matrix(&self) -> Result<DMatrix<f64>> {
        let t = self.horizon;
        let len = t * self.stage_len;
        let mut jac = DMatrix::zeros(len, len);

        // multiplier columns: only their own stage rows are touched
        for (idx, stage) in self.stages.iter().enumerate() {
            let row0 = idx * self.stage_len;
            for i in 0..self.n_i {
                let col = row0 + self.m + i;
                for r in 0..self.m {
                    let dj = stage.g_jac_t[(r, i)];
                    jac[(row0 + r, col)] = match self.form {
                        StationarityForm::Proximal => stage.slope[r] * self.gamma * dj,
                        StationarityForm::Smoothed { .. } => dj,
                    };
                }
                jac[(row0 + self.m + i, col)] = stage.psi_db[i];
            }
            for i in 0..self.n_e {
                let col = row0 + self.m + self.n_i + i;
                for r in 0..self.m {
                    let dj = stage.h_jac_t[(r, i)];
                    jac[(row0 + r, col)] = match self.form {
                        StationarityForm::Proximal => stage.slope[r] * self.gamma * dj,
                        StationarityForm::Smoothed { .. } => dj,
                    };
                }
            }
        }

        // input columns: recursions with reusable scratch
        let mut dxs = vec![DVector::zeros(self.n); t + 1];
        let mut dps = vec![DVector::zeros(self.n); t];
        let mut dj = DVector::zeros(self.m);
        for j in 0..t {
            for i in 0..self.m {
                let col = j * self.stage_len + i;

                // forward from the perturbed stage: dx[j+1] = column i of B_j
                dxs[j + 1].copy_from(&self.stages[j].b.column(i));
                for q in (j + 1)..t {
                    let (head, tail) = dxs.split_at_mut(q + 1);
                    tail[0].gemv(1.0, &self.stages[q].a, &head[q], 0.0);
                }

                // backward
                dps[t - 1].gemv(1.0, &self.phi_xx, &dxs[t], 0.0);
                for idx in (0..t - 1).rev() {
                    let stage = &self.stages[idx + 1];
                    let (head, tail) = dps.split_at_mut(idx + 1);
                    head[idx].gemv(1.0, &stage.a_t, &tail[0], 0.0);
                    if idx >= j {
                        head[idx].gemv(1.0, &stage.px, &dxs[idx + 1], 1.0);
                    }
                    if idx + 1 == j {
                        let pu_col = stage.pu.column(i);
                        for r in 0..self.n {
                            head[idx][r] += pu_col[r];
                        }
                    }
                }

                // rows
                for (k, stage) in self.stages.iter().enumerate() {
                    dj.gemv(1.0, &stage.b_t, &dps[k], 0.0);
                    if k > j {
                        dj.gemv(1.0, &stage.jx, &dxs[k], 1.0);
                    }
                    if k == j {
                        let ju_col = stage.ju.column(i);
                        for r in 0..self.m {
                            dj[r] += ju_col[r];
                        }
                    }
                    let row0 = k * self.stage_len;
                    match self.form {
                        StationarityForm::Proximal => {
                            for r in 0..self.m {
                                let du_r = if k == j && r == i { 1.0 } else { 0.0 };
                                jac[(row0 + r, col)] =
                                    du_r - stage.slope[r] * (du_r - self.gamma * dj[r]);
                            }
                        }
                        StationarityForm::Smoothed { .. } => {
                            for r in 0..self.m {
                                let du_r = if k == j && r == i { 1.0 } else { 0.0 };
                                jac[(row0 + r, col)] = stage.slope[r] * du_r + dj[r];
                            }
                        }
                    }
                    if k == j {
                        for r in 0..self.n_i {
                            jac[(row0 + self.m + r, col)] =
                                stage.psi_da[r] * (-stage.g_jac[(r, i)]);
                        }
                        for r in 0..self.n_e {
                            jac[(row0 + self.m + self.n_i + r, col)] = stage.h_jac[(r, i)];
                        }
                    }
                }
            }
        }

        for j in 0..len {
            for i in 0..len {
                if !jac[(i, j)].is_finite() {
                    return Err(Error::NonFiniteJacobian { row: i, col: j });
                }
            }
        }
        Ok(jac)
    }

    /// Dense `∂F/∂x¹`.
    pub fn jacobian_x1_matrix(&self) -> Result<DMatrix<f64>> {
        let len = self.horizon * self.stage_len;
        let mut jac = DMatrix::zeros(len, self.n);
        let mut e = DVector::zeros(self.n);
        for j in 0..self.n {
            e[j] = 1.0;
            let col = self.apply_x1(&e);
            e[j] = 0.0;
            check_column(&col, j)?;
            jac.column_mut(j).copy_from(&col);
        }
        Ok(jac)
    }

    /// Inequality values `g(u^k)` at the base point for stage `k` (1-based).
    pub fn stage_inequality(&self, k: usize) -> &DVector<f64> {
        &self.stages[k - 1].g_vals
    }

    /// Base-point input of stage `k` (1-based).
    pub fn stage_input(&self, k: usize) -> &DVector<f64> {
        &self.stages[k - 1].u
    }
}

fn check_column(col: &DVector<f64>, j: usize) -> Result<()> {
    for (i, v) in col.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteJacobian { row: i, col: j });
        }
    }
    Ok(())
}

/// `∂cb/∂x` by central differences, for a callback returning `rows` entries.
fn diff_wrt_x<F>(cb: F, x: &DVector<f64>, rows: usize, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut out = DMatrix::zeros(rows, n);
    let mut xp = x.clone();
    let mut xm = x.clone();
    for j in 0..n {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let col = (cb(&xp) - cb(&xm)).scale(1.0 / (2.0 * h));
        out.column_mut(j).copy_from(&col);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    out
}

fn diff_wrt_u<F>(cb: F, u: &DVector<f64>, rows: usize, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    diff_wrt_x(cb, u, rows, h)
}

fn smoothed_slope(reg: &Regularizer, u: &DVector<f64>, epsilon: f64) -> Result<DVector<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    match reg {
        Regularizer::ScaledL1 { weight } => {
            let w = *weight;
            Ok(u.map(|ui| {
                let c = (ui / epsilon).cosh();
                let s = 1.0 / c;
                w / epsilon * s * s
            }))
        }
        Regularizer::Zero => Ok(DVector::zeros(u.len())),
        Regularizer::Custom { .. } => Err(Error::Capability {
            capability: "smoothed gradient (scaled-l1 regularizer required)",
        }),
    }
}

/// `∂F/∂z` of the proximal residual at `(z, x¹)`.
pub fn jacobian_z(
    spec: &ProblemSpec,
    z: &DecisionVector,
    x1: &DVector<f64>,
    gamma: f64,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    match mode {
        JacobianMode::Analytic => {
            ResidualLinearization::new(spec, z, x1, gamma, StationarityForm::Proximal)?
                .jacobian_z_matrix()
        }
        JacobianMode::FiniteDifference { fd_step } => {
            fd_jacobian_z(spec, z, x1, gamma, StationarityForm::Proximal, fd_step)
        }
    }
}

/// `∂F/∂x¹` of the proximal residual at `(z, x¹)`.
pub fn jacobian_x1(
    spec: &ProblemSpec,
    z: &DecisionVector,
    x1: &DVector<f64>,
    gamma: f64,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    match mode {
        JacobianMode::Analytic => {
            ResidualLinearization::new(spec, z, x1, gamma, StationarityForm::Proximal)?
                .jacobian_x1_matrix()
        }
        JacobianMode::FiniteDifference { fd_step } => {
            fd_jacobian_x1(spec, z, x1, gamma, StationarityForm::Proximal, fd_step)
        }
    }
}

/// Forward-difference Jacobian over the decision vector.
pub fn fd_jacobian_z(
    spec: &ProblemSpec,
    z: &DecisionVector,
    x1: &DVector<f64>,
    gamma: f64,
    form: StationarityForm,
    fd_step: f64,
) -> Result<DMatrix<f64>> {
    let base = residual_with_form(spec, z, x1, gamma, form)?;
    let len = base.len();
    let mut jac = DMatrix::zeros(len, len);
    for j in 0..len {
        let h = fd_step * (1.0 + z.as_vector()[j].abs());
        let mut z_pert = z.as_vector().clone();
        z_pert[j] += h;
        let zp = DecisionVector::from_vector(z.dims(), z_pert)?;
        let col = (residual_with_form(spec, &zp, x1, gamma, form)? - &base).scale(1.0 / h);
        check_column(&col, j)?;
        jac.column_mut(j).copy_from(&col);
    }
    Ok(jac)
}

/// Forward-difference Jacobian over the initial state.
pub fn fd_jacobian_x1(
    spec: &ProblemSpec,
    z: &DecisionVector,
    x1: &DVector<f64>,
    gamma: f64,
    form: StationarityForm,
    fd_step: f64,
) -> Result<DMatrix<f64>> {
    let base = residual_with_form(spec, z, x1, gamma, form)?;
    let len = base.len();
    let mut jac = DMatrix::zeros(len, x1.len());
    for j in 0..x1.len() {
        let h = fd_step * (1.0 + x1[j].abs());
        let mut xp = x1.clone();
        xp[j] += h;
        let col = (residual_with_form(spec, z, &xp, gamma, form)? - &base).scale(1.0 / h);
        check_column(&col, j)?;
        jac.column_mut(j).copy_from(&col);
    }
    Ok(jac)
}
