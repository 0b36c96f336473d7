//! Problem definition and the forward/backward trajectory passes.
//!
//! A [`ProblemSpec`] bundles the discrete dynamics `x^{k+1} = f(x^k, u^k)`,
//! stage and terminal costs, input constraints `g(u) ≤ 0`, `h(u) = 0`, and the
//! nonsmooth input regularizer, all with analytic first derivatives. Callbacks
//! are required to be pure and reentrant; under that contract every operation
//! here is safe to call concurrently on a shared spec.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::decision::{DecisionVector, StageDims};
use crate::error::{Error, Result};
use crate::prox::Regularizer;

pub type DynamicsFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type DynamicsJacFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type StageCostFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
pub type StageCostGradFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type TerminalCostFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type TerminalCostGradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type ConstraintFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type ConstraintJacFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// The optimal control problem over a horizon of `T` stages.
pub struct ProblemSpec {
    state_dim: usize,
    input_dim: usize,
    ineq_count: usize,
    eq_count: usize,
    horizon: usize,
    dynamics: DynamicsFn,
    dynamics_jac_x: DynamicsJacFn,
    dynamics_jac_u: DynamicsJacFn,
    stage_cost: StageCostFn,
    stage_cost_grad_x: StageCostGradFn,
    stage_cost_grad_u: StageCostGradFn,
    terminal_cost: TerminalCostFn,
    terminal_cost_grad: TerminalCostGradFn,
    ineq: ConstraintFn,
    ineq_jac: ConstraintJacFn,
    eq: ConstraintFn,
    eq_jac: ConstraintJacFn,
    regularizer: Regularizer,
}

impl ProblemSpec {
    pub fn builder(state_dim: usize, input_dim: usize, horizon: usize) -> ProblemSpecBuilder {
        ProblemSpecBuilder::new(state_dim, input_dim, horizon)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn ineq_count(&self) -> usize {
        self.ineq_count
    }

    pub fn eq_count(&self) -> usize {
        self.eq_count
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dims(&self) -> StageDims {
        StageDims {
            inputs: self.input_dim,
            ineq: self.ineq_count,
            eq: self.eq_count,
            horizon: self.horizon,
        }
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.dynamics)(x, u)
    }

    pub fn dynamics_jac_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        (self.dynamics_jac_x)(x, u)
    }

    pub fn dynamics_jac_u(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        (self.dynamics_jac_u)(x, u)
    }

    pub fn stage_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.stage_cost)(x, u)
    }

    pub fn stage_cost_grad_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.stage_cost_grad_x)(x, u)
    }

    pub fn stage_cost_grad_u(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.stage_cost_grad_u)(x, u)
    }

    pub fn terminal_cost(&self, x: &DVector<f64>) -> f64 {
        (self.terminal_cost)(x)
    }

    pub fn terminal_cost_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.terminal_cost_grad)(x)
    }

    pub fn ineq(&self, u: &DVector<f64>) -> DVector<f64> {
        (self.ineq)(u)
    }

    pub fn ineq_jac(&self, u: &DVector<f64>) -> DMatrix<f64> {
        (self.ineq_jac)(u)
    }

    pub fn eq(&self, u: &DVector<f64>) -> DVector<f64> {
        (self.eq)(u)
    }

    pub fn eq_jac(&self, u: &DVector<f64>) -> DMatrix<f64> {
        (self.eq_jac)(u)
    }
}

pub struct ProblemSpecBuilder {
    state_dim: usize,
    input_dim: usize,
    horizon: usize,
    dynamics: Option<(DynamicsFn, DynamicsJacFn, DynamicsJacFn)>,
    stage_cost: Option<(StageCostFn, StageCostGradFn, StageCostGradFn)>,
    terminal_cost: Option<(TerminalCostFn, TerminalCostGradFn)>,
    ineq: Option<(usize, ConstraintFn, ConstraintJacFn)>,
    eq: Option<(usize, ConstraintFn, ConstraintJacFn)>,
    regularizer: Regularizer,
}

impl ProblemSpecBuilder {
    fn new(state_dim: usize, input_dim: usize, horizon: usize) -> Self {
        ProblemSpecBuilder {
            state_dim,
            input_dim,
            horizon,
            dynamics: None,
            stage_cost: None,
            terminal_cost: None,
            ineq: None,
            eq: None,
            regularizer: Regularizer::Zero,
        }
    }

    pub fn dynamics(
        mut self,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        jac_x: impl Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        jac_u: impl Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.dynamics = Some((Arc::new(f), Arc::new(jac_x), Arc::new(jac_u)));
        self
    }

    pub fn stage_cost(
        mut self,
        cost: impl Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        grad_u: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.stage_cost = Some((Arc::new(cost), Arc::new(grad_x), Arc::new(grad_u)));
        self
    }

    pub fn terminal_cost(
        mut self,
        cost: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.terminal_cost = Some((Arc::new(cost), Arc::new(grad)));
        self
    }

    pub fn inequality(
        mut self,
        count: usize,
        g: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.ineq = Some((count, Arc::new(g), Arc::new(jac)));
        self
    }

    pub fn equality(
        mut self,
        count: usize,
        h: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.eq = Some((count, Arc::new(h), Arc::new(jac)));
        self
    }

    pub fn regularizer(mut self, reg: Regularizer) -> Self {
        self.regularizer = reg;
        self
    }

    /// Validates dimensions and probes every callback at the origin, so shape
    /// mistakes surface at construction rather than mid-solve.
    pub fn build(self) -> Result<ProblemSpec> {
        let (n, m, horizon) = (self.state_dim, self.input_dim, self.horizon);
        if n < 1 {
            return Err(Error::invalid("state_dim", "must be at least 1"));
        }
        if m < 1 {
            return Err(Error::invalid("input_dim", "must be at least 1"));
        }
        if horizon < 1 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        self.regularizer.validate()?;

        let (dynamics, dynamics_jac_x, dynamics_jac_u) = self
            .dynamics
            .ok_or_else(|| Error::invalid("dynamics", "callbacks are required"))?;

        let (stage_cost, stage_cost_grad_x, stage_cost_grad_u) =
            self.stage_cost.unwrap_or_else(|| {
                (
                    Arc::new(|_: &DVector<f64>, _: &DVector<f64>| 0.0) as StageCostFn,
                    Arc::new(|x: &DVector<f64>, _: &DVector<f64>| DVector::zeros(x.len()))
                        as StageCostGradFn,
                    Arc::new(|_: &DVector<f64>, u: &DVector<f64>| DVector::zeros(u.len()))
                        as StageCostGradFn,
                )
            });

        let (terminal_cost, terminal_cost_grad) = self.terminal_cost.unwrap_or_else(|| {
            (
                Arc::new(|_: &DVector<f64>| 0.0) as TerminalCostFn,
                Arc::new(|x: &DVector<f64>| DVector::zeros(x.len())) as TerminalCostGradFn,
            )
        });

        let (ineq_count, ineq, ineq_jac) = match self.ineq {
            Some((count, g, jac)) => (count, g, jac),
            None => (
                0,
                Arc::new(|_: &DVector<f64>| DVector::zeros(0)) as ConstraintFn,
                Arc::new(move |_: &DVector<f64>| DMatrix::zeros(0, m)) as ConstraintJacFn,
            ),
        };
        let (eq_count, eq, eq_jac) = match self.eq {
            Some((count, h, jac)) => (count, h, jac),
            None => (
                0,
                Arc::new(|_: &DVector<f64>| DVector::zeros(0)) as ConstraintFn,
                Arc::new(move |_: &DVector<f64>| DMatrix::zeros(0, m)) as ConstraintJacFn,
            ),
        };

        let spec = ProblemSpec {
            state_dim: n,
            input_dim: m,
            ineq_count,
            eq_count,
            horizon,
            dynamics,
            dynamics_jac_x,
            dynamics_jac_u,
            stage_cost,
            stage_cost_grad_x,
            stage_cost_grad_u,
            terminal_cost,
            terminal_cost_grad,
            ineq,
            ineq_jac,
            eq,
            eq_jac,
            regularizer: self.regularizer,
        };
        spec.probe()?;
        Ok(spec)
    }
}

impl ProblemSpec {
    fn probe(&self) -> Result<()> {
        let x0 = DVector::zeros(self.state_dim);
        let u0 = DVector::zeros(self.input_dim);
        let check_vec = |context: &str, v: &DVector<f64>, expected: usize| -> Result<()> {
            if v.len() != expected {
                return Err(Error::dimension(context, expected, v.len()));
            }
            Ok(())
        };
        let check_mat =
            |context: &str, mat: &DMatrix<f64>, rows: usize, cols: usize| -> Result<()> {
                if mat.nrows() != rows {
                    return Err(Error::dimension(format!("{context} rows"), rows, mat.nrows()));
                }
                if mat.ncols() != cols {
                    return Err(Error::dimension(format!("{context} cols"), cols, mat.ncols()));
                }
                Ok(())
            };

        check_vec("dynamics output", &self.dynamics(&x0, &u0), self.state_dim)?;
        check_mat(
            "dynamics jacobian wrt state",
            &self.dynamics_jac_x(&x0, &u0),
            self.state_dim,
            self.state_dim,
        )?;
        check_mat(
            "dynamics jacobian wrt input",
            &self.dynamics_jac_u(&x0, &u0),
            self.state_dim,
            self.input_dim,
        )?;
        check_vec(
            "stage cost gradient wrt state",
            &self.stage_cost_grad_x(&x0, &u0),
            self.state_dim,
        )?;
        check_vec(
            "stage cost gradient wrt input",
            &self.stage_cost_grad_u(&x0, &u0),
            self.input_dim,
        )?;
        check_vec(
            "terminal cost gradient",
            &self.terminal_cost_grad(&x0),
            self.state_dim,
        )?;
        check_vec("inequality output", &self.ineq(&u0), self.ineq_count)?;
        check_mat(
            "inequality jacobian",
            &self.ineq_jac(&u0),
            self.ineq_count,
            self.input_dim,
        )?;
        check_vec("equality output", &self.eq(&u0), self.eq_count)?;
        check_mat(
            "equality jacobian",
            &self.eq_jac(&u0),
            self.eq_count,
            self.input_dim,
        )?;
        Ok(())
    }
}

/// States `x^{1:T+1}` and costates `p^{2:T+1}` induced by `(z, x¹)`.
#[derive(Debug, Clone)]
pub struct TrajectoryPair {
    /// `states[k-1] = x^k` for `k = 1, …, T+1`.
    pub states: Vec<DVector<f64>>,
    /// `costates[k-2] = p^k` for `k = 2, …, T+1`.
    pub costates: Vec<DVector<f64>>,
}

impl TrajectoryPair {
    pub fn compute(spec: &ProblemSpec, x1: &DVector<f64>, z: &DecisionVector) -> Result<Self> {
        let states = rollout(spec, x1, z)?;
        let costates = costates(spec, &states, z)?;
        Ok(TrajectoryPair { states, costates })
    }

    /// `x^k`, `k ∈ {1, …, T+1}`.
    pub fn state(&self, k: usize) -> &DVector<f64> {
        &self.states[k - 1]
    }

    /// `p^k`, `k ∈ {2, …, T+1}`.
    pub fn costate(&self, k: usize) -> &DVector<f64> {
        &self.costates[k - 2]
    }
}

/// Forward pass `x^{k+1} = f(x^k, u^k)`, `k = 1, …, T`. Returns the full
/// sequence `x^{1:T+1}` (the initial state included at index 0).
pub fn rollout(
    spec: &ProblemSpec,
    x1: &DVector<f64>,
    z: &DecisionVector,
) -> Result<Vec<DVector<f64>>> {
    if x1.len() != spec.state_dim() {
        return Err(Error::dimension("initial state", spec.state_dim(), x1.len()));
    }
    let t = spec.horizon();
    let mut states = Vec::with_capacity(t + 1);
    states.push(x1.clone());
    for k in 1..=t {
        let u = z.u(k).clone_owned();
        let next = spec.dynamics(&states[k - 1], &u);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "rollout",
                stage: k,
            });
        }
        states.push(next);
    }
    Ok(states)
}

/// Backward pass: `p^{T+1} = ∇φ(x^{T+1})` and
/// `p^k = ∇ₓL(x^k, u^k) + (∂f/∂x(x^k, u^k))ᵀ p^{k+1}` for `k = T, …, 2`.
pub fn costates(
    spec: &ProblemSpec,
    states: &[DVector<f64>],
    z: &DecisionVector,
) -> Result<Vec<DVector<f64>>> {
    let t = spec.horizon();
    if states.len() != t + 1 {
        return Err(Error::dimension("state sequence", t + 1, states.len()));
    }
    let mut costates = vec![DVector::zeros(spec.state_dim()); t];
    let p_terminal = spec.terminal_cost_grad(&states[t]);
    if !p_terminal.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "costates",
            stage: t + 1,
        });
    }
    costates[t - 1] = p_terminal;
    for k in (2..=t).rev() {
        let x = &states[k - 1];
        let u = z.u(k).clone_owned();
        let p_next = costates[k - 1].clone();
        let p = spec.stage_cost_grad_x(x, &u) + spec.dynamics_jac_x(x, &u).transpose() * p_next;
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "costates",
                stage: k,
            });
        }
        costates[k - 2] = p;
    }
    Ok(costates)
}

/// Input gradient of the stage Hamiltonian
/// `H = L(x, u) + μᵀg(u) + νᵀh(u) + pᵀf(x, u)`:
/// `∇ᵤL + (∂g/∂u)ᵀμ + (∂h/∂u)ᵀν + (∂f/∂u)ᵀp`.
pub fn hamiltonian_grad_u(
    spec: &ProblemSpec,
    x: &DVector<f64>,
    u: &DVector<f64>,
    mu: &DVector<f64>,
    nu: &DVector<f64>,
    p_next: &DVector<f64>,
) -> DVector<f64> {
    let mut grad = spec.stage_cost_grad_u(x, u);
    if spec.ineq_count() > 0 {
        grad += spec.ineq_jac(u).transpose() * mu;
    }
    if spec.eq_count() > 0 {
        grad += spec.eq_jac(u).transpose() * nu;
    }
    grad += spec.dynamics_jac_u(x, u).transpose() * p_next;
    grad
}
