//! The bundled benchmark plant: a five-state, two-input nonlinear system
//! discretized by forward Euler, with quadratic costs, unit input bounds, and
//! a scaled ℓ₁ input regularizer that induces sparse (bang-off) actuation.

use nalgebra::{DMatrix, DVector};

use crate::ocp::ProblemSpec;
use crate::prox::Regularizer;

pub const STATE_DIM: usize = 5;
pub const INPUT_DIM: usize = 2;
pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_HORIZON: usize = 60;
pub const DEFAULT_L1_WEIGHT: f64 = 4.0;

/// Continuous-time drift of the benchmark plant.
fn drift(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        x[2],
        x[3],
        -0.1 * x[0] - 0.1 * (0.1 * x[1]).cosh() * x[2],
        -0.2 * x[1] - 0.2 * (0.1 * x[0]).cosh() * x[3] + 0.1 * x[3],
        -0.3 * x[4] + x[2].tanh() + x[3].tanh(),
    ])
}

/// State Jacobian of the drift.
fn drift_jac(x: &DVector<f64>) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(STATE_DIM, STATE_DIM);
    jac[(0, 2)] = 1.0;
    jac[(1, 3)] = 1.0;
    jac[(2, 0)] = -0.1;
    jac[(2, 1)] = -0.01 * (0.1 * x[1]).sinh() * x[2];
    jac[(2, 2)] = -0.1 * (0.1 * x[1]).cosh();
    jac[(3, 0)] = -0.02 * (0.1 * x[0]).sinh() * x[3];
    jac[(3, 1)] = -0.2;
    jac[(3, 3)] = -0.2 * (0.1 * x[0]).cosh() + 0.1;
    jac[(4, 2)] = sech_sq(x[2]);
    jac[(4, 3)] = sech_sq(x[3]);
    jac[(4, 4)] = -0.3;
    jac
}

fn sech_sq(t: f64) -> f64 {
    let c = t.cosh();
    let s = 1.0 / c;
    s * s
}

fn input_matrix() -> DMatrix<f64> {
    let mut b = DMatrix::zeros(STATE_DIM, INPUT_DIM);
    b[(2, 0)] = 1.0;
    b[(3, 1)] = 1.0;
    b
}

/// Benchmark problem with the default sampling period, horizon, and
/// regularizer weight.
pub fn example_plant() -> ProblemSpec {
    example_plant_with(DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_L1_WEIGHT)
}

/// Benchmark problem with configurable sampling period, horizon, and ℓ₁
/// weight.
///
/// * dynamics: `f(x, u) = x + dt·f̃(x) + dt·B u` (forward Euler)
/// * stage cost `L(x, u) = ½ xᵀx + uᵀu`, terminal cost `φ(x) = (1/10) xᵀx`
/// * input bounds `−1 ≤ uᵢ ≤ 1` encoded as `g(u) = [u − 1; −u − 1] ≤ 0`
/// * regularizer `r(u) = l1_weight · ‖u‖₁`
pub fn example_plant_with(dt: f64, horizon: usize, l1_weight: f64) -> ProblemSpec {
    assert!(dt > 0.0, "sampling period must be positive");
    let b = input_matrix();
    let b_dt = b.scale(dt);
    let b_dt_f = b_dt.clone();

    ProblemSpec::builder(STATE_DIM, INPUT_DIM, horizon)
        .dynamics(
            move |x, u| x + drift(x).scale(dt) + &b_dt_f * u,
            move |x, _| DMatrix::identity(STATE_DIM, STATE_DIM) + drift_jac(x).scale(dt),
            move |_, _| b_dt.clone(),
        )
        .stage_cost(
            |x, u| 0.5 * x.dot(x) + u.dot(u),
            |x, _| x.clone(),
            |_, u| u.scale(2.0),
        )
        .terminal_cost(|x| 0.1 * x.dot(x), |x| x.scale(0.2))
        .inequality(
            2 * INPUT_DIM,
            |u| {
                let mut g = DVector::zeros(2 * INPUT_DIM);
                for i in 0..INPUT_DIM {
                    g[i] = u[i] - 1.0;
                    g[INPUT_DIM + i] = -u[i] - 1.0;
                }
                g
            },
            |_| {
                let mut jac = DMatrix::zeros(2 * INPUT_DIM, INPUT_DIM);
                for i in 0..INPUT_DIM {
                    jac[(i, i)] = 1.0;
                    jac[(INPUT_DIM + i, i)] = -1.0;
                }
                jac
            },
        )
        .regularizer(Regularizer::scaled_l1(l1_weight).expect("positive weight"))
        .build()
        .expect("benchmark problem is well-formed")
}
