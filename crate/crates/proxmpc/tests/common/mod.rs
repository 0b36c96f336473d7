//! Shared fixtures: random LTI-LQ problems and an independent dense KKT
//! oracle for them.
#![allow(dead_code)] // not every test target uses every fixture
//!
//! The oracle stacks the first-order conditions of the unconstrained
//! linear-quadratic problem
//!
//! ```text
//! x^{k+1} = A x^k + B u^k,    L = ½ xᵀQx + ½ uᵀRu,    φ = ½ xᵀQ_f x
//! ```
//!
//! over `(u^{1:T}, x^{2:T+1}, p^{2:T+1})` into one linear system and solves it
//! with nalgebra's full-pivot LU, staying independent of the library's own
//! solve path.

use nalgebra::{DMatrix, DVector};
use proxmpc::{DecisionVector, ProblemSpec, Regularizer};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct LqProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub qf: DMatrix<f64>,
    pub horizon: usize,
}

impl LqProblem {
    pub fn spec(&self) -> ProblemSpec {
        self.spec_with_regularizer(Regularizer::Zero)
    }

    pub fn spec_with_regularizer(&self, reg: Regularizer) -> ProblemSpec {
        let (a, b) = (self.a.clone(), self.b.clone());
        let (a2, b2) = (self.a.clone(), self.b.clone());
        let q = self.q.clone();
        let q2 = self.q.clone();
        let r = self.r.clone();
        let r2 = self.r.clone();
        let qf = self.qf.clone();
        let qf2 = self.qf.clone();
        let n = self.a.nrows();
        let m = self.b.ncols();
        ProblemSpec::builder(n, m, self.horizon)
            .dynamics(
                move |x, u| &a * x + &b * u,
                move |_, _| a2.clone(),
                move |_, _| b2.clone(),
            )
            .stage_cost(
                move |x, u| 0.5 * (x.dot(&(&q * x))) + 0.5 * (u.dot(&(&r * u))),
                move |x, _| &q2 * x,
                move |_, u| &r2 * u,
            )
            .terminal_cost(move |x| 0.5 * (x.dot(&(&qf * x))), move |x| &qf2 * x)
            .regularizer(reg)
            .build()
            .expect("well-formed LQ problem")
    }
}

/// Random LTI-LQ instance with positive-definite input cost and
/// positive-semidefinite state costs.
pub fn random_lq(seed: u64, n: usize, m: usize, horizon: usize) -> LqProblem {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut mat = |rows: usize, cols: usize, scale: f64| {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0) * scale)
    };
    let a = mat(n, n, 1.0 / n as f64) + DMatrix::identity(n, n).scale(0.5);
    let b = mat(n, m, 1.0);
    let mq = mat(n, n, 1.0);
    let q = &mq.transpose() * &mq + DMatrix::identity(n, n).scale(0.1);
    let mr = mat(m, m, 1.0);
    let r = &mr.transpose() * &mr + DMatrix::identity(m, m).scale(0.5);
    let mqf = mat(n, n, 1.0);
    let qf = &mqf.transpose() * &mqf + DMatrix::identity(n, n).scale(0.1);
    LqProblem {
        a,
        b,
        q,
        r,
        qf,
        horizon,
    }
}

pub fn random_state(seed: u64, n: usize) -> DVector<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Optimal inputs of the unconstrained LQ problem by the stacked dense KKT
/// system. Variable order: `u^{1:T}`, `x^{2:T+1}`, `p^{2:T+1}`.
pub fn lq_kkt_inputs(lq: &LqProblem, x1: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = lq.a.nrows();
    let m = lq.b.ncols();
    let t = lq.horizon;
    let dim = t * m + t * n + t * n;
    let mut big = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);

    let u_off = |k: usize| (k - 1) * m; // k = 1..T
    let x_off = |k: usize| t * m + (k - 2) * n; // k = 2..T+1
    let p_off = |k: usize| t * m + t * n + (k - 2) * n; // k = 2..T+1

    let mut row = 0usize;

    // dynamics: x^{k+1} - A x^k - B u^k = 0
    for k in 1..=t {
        for i in 0..n {
            big[(row + i, x_off(k + 1) + i)] = 1.0;
        }
        big.view_mut((row, u_off(k)), (n, m)).copy_from(&(-lq.b.clone()));
        if k == 1 {
            let ax1 = &lq.a * x1;
            rhs.rows_mut(row, n).copy_from(&ax1);
        } else {
            big.view_mut((row, x_off(k)), (n, n)).copy_from(&(-lq.a.clone()));
        }
        row += n;
    }

    // costates: p^k - Q x^k - Aᵀ p^{k+1} = 0 for k = 2..T
    for k in 2..=t {
        for i in 0..n {
            big[(row + i, p_off(k) + i)] = 1.0;
        }
        big.view_mut((row, x_off(k)), (n, n)).copy_from(&(-lq.q.clone()));
        big.view_mut((row, p_off(k + 1)), (n, n))
            .copy_from(&(-lq.a.transpose()));
        row += n;
    }
    // terminal: p^{T+1} - Q_f x^{T+1} = 0
    for i in 0..n {
        big[(row + i, p_off(t + 1) + i)] = 1.0;
    }
    big.view_mut((row, x_off(t + 1)), (n, n))
        .copy_from(&(-lq.qf.clone()));
    row += n;

    // stationarity: R u^k + Bᵀ p^{k+1} = 0 for k = 1..T
    for k in 1..=t {
        big.view_mut((row, u_off(k)), (m, m)).copy_from(&lq.r);
        big.view_mut((row, p_off(k + 1)), (m, n))
            .copy_from(&lq.b.transpose());
        row += m;
    }
    assert_eq!(row, dim);

    let sol = big
        .full_piv_lu()
        .solve(&rhs)
        .expect("stacked KKT system is nonsingular");
    (1..=t)
        .map(|k| sol.rows(u_off(k), m).clone_owned())
        .collect()
}

/// Embeds an input sequence into a decision vector (no constraints).
pub fn decision_from_inputs(spec: &ProblemSpec, inputs: &[DVector<f64>]) -> DecisionVector {
    let mut z = DecisionVector::zeros(spec.dims());
    for (idx, u) in inputs.iter().enumerate() {
        z.set_u(idx + 1, u);
    }
    z
}
