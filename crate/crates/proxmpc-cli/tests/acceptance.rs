//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them).
//!
//! A1 and A2 encode reference switching-time windows and a terminal-norm
//! bound for the bundled benchmark. With the benchmark plant as defined
//! (input matrix scaled by the sampling period), even a fully converged
//! per-step solve switches the inputs off later (9.3 s / 12.2 s) and settles
//! larger (0.74) than those targets; the input authority is too small to
//! reach them with |u| <= 1. The two tests assert the stated targets anyway
//! and currently fail, documenting the gap rather than hiding it.

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use proxmpc::{
    gmres_solve, initialize, jacobian_z, lu_solve, prox_eval, subgradient_contains_with_tol,
    ContinuationConfig, DecisionVector, JacobianMode, LinearSolverConfig, ncp_eval, ProblemSpec,
    Regularizer, ResidualLinearization, SolveMethod, StationarityForm,
};
use proxmpc_cli::{
    compare_methods, render_trace_csv, run_experiment, switch_off_time, ExperimentConfig, Method,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn proposed_config() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn conventional_config() -> ExperimentConfig {
    ExperimentConfig {
        method: Method::Conventional,
        epsilon: Some(1e-2),
        ..Default::default()
    }
}

static PROPOSED_RUN: LazyLock<(proxmpc::SimTrace, Duration)> = LazyLock::new(|| {
    let started = Instant::now();
    let trace = run_experiment(&proposed_config()).expect("default proposed run completes");
    (trace, started.elapsed())
});

#[test]
fn a1_sparsity_switching() {
    let (trace, elapsed) = &*PROPOSED_RUN;
    assert!(
        *elapsed < Duration::from_secs(30),
        "A1 sparsity switching: FAIL — run took {elapsed:?}"
    );
    let t1 = switch_off_time(trace, 0);
    let t2 = switch_off_time(trace, 1);
    let ok1 = matches!(t1, Some(t) if (3.5..=5.5).contains(&t));
    let ok2 = matches!(t2, Some(t) if (2.0..=4.0).contains(&t));
    if ok1 && ok2 {
        println!("A1 sparsity switching: pass (t_off1 = {t1:?}, t_off2 = {t2:?}, {elapsed:?})");
    }
    assert!(
        ok1 && ok2,
        "A1 sparsity switching: FAIL — t_off1 = {t1:?} (window [3.5, 5.5]), t_off2 = {t2:?} (window [2.0, 4.0])"
    );
}

#[test]
fn a2_regulation() {
    let (trace, _) = &*PROPOSED_RUN;
    let final_norm = trace.final_state.amax();
    if final_norm < 0.5 {
        println!("A2 regulation: pass (|x(20)|_inf = {final_norm:.4})");
    }
    assert!(
        final_norm < 0.5,
        "A2 regulation: FAIL — |x(20)|_inf = {final_norm:.4} (required < 0.5)"
    );
}

#[test]
fn a3_residual_advantage() {
    let comparison = compare_methods(&proposed_config(), &conventional_config())
        .expect("both methods complete");
    let median = comparison.median_ratio_final_half;
    println!("A3 residual advantage: {} (median final-half ratio {median:.3e})",
        if median <= 0.1 { "pass" } else { "FAIL" });
    assert!(
        median <= 0.1,
        "A3 residual advantage: FAIL — median ratio {median:.3e} (required <= 0.1)"
    );
}

#[test]
fn a4_initialization() {
    let spec = proxmpc::benchmark::example_plant();
    let cfg = ContinuationConfig::default();
    assert_eq!(cfg.init_max_iter, 100);
    let z0 = DecisionVector::zeros(spec.dims());
    let x1 = DVector::from_vec(vec![6.0, -8.0, 3.0, -2.0, 5.0]);
    let state = initialize(&spec, &x1, &z0, &cfg)
        .expect("A4 initialization: FAIL — Newton did not converge within 100 iterations");
    println!(
        "A4 initialization: pass (residual {:.3e} <= 1e-6)",
        state.last_residual_norm
    );
    assert!(state.last_residual_norm <= 1e-6);
}

#[test]
fn a5_prox_equivalence_suite() {
    let mut rng = StdRng::seed_from_u64(55_055);
    for trial in 0..1000 {
        let weight = rng.random_range(0.1..5.0);
        let reg = Regularizer::scaled_l1(weight).unwrap();
        let gamma = rng.random_range(0.05..3.0);
        let dim = rng.random_range(1..6);

        // forward: an explicit subgradient recovers its base point
        let x_star: DVector<f64> = DVector::from_fn(dim, |_, _| {
            if rng.random_bool(0.4) {
                0.0
            } else {
                rng.random_range(-4.0..4.0)
            }
        });
        let g = DVector::from_fn(dim, |i, _| {
            if x_star[i] == 0.0 {
                rng.random_range(-weight..weight)
            } else {
                weight * x_star[i].signum()
            }
        });
        let recovered = prox_eval(&reg, &(&x_star + g.scale(gamma)), gamma).unwrap();
        assert!(
            (recovered - &x_star).amax() <= 1e-10,
            "A5 prox equivalence: FAIL — forward trial {trial}"
        );

        // reverse: the prox displacement is a subgradient at the image
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-6.0..6.0));
        let x = prox_eval(&reg, &v, gamma).unwrap();
        let q = (&v - &x).scale(1.0 / gamma);
        assert!(
            subgradient_contains_with_tol(&reg, &x, &q, 1e-10).unwrap(),
            "A5 prox equivalence: FAIL — reverse trial {trial}"
        );
    }
    println!("A5 prox equivalence suite: pass (1000 forward + 1000 reverse at 1e-10)");
}

#[test]
fn a6_fb_characterization() {
    for i in 0..=40 {
        for j in 0..=40 {
            let a = (i as f64 - 20.0) * 0.1;
            let b = (j as f64 - 20.0) * 0.1;
            let on_set = a >= 0.0 && b >= 0.0 && a * b == 0.0;
            let phi = ncp_eval(a, b);
            assert_eq!(
                phi.abs() <= 1e-12,
                on_set,
                "A6 FB characterization: FAIL at ({a}, {b})"
            );
        }
    }
    println!("A6 FB characterization: pass (41x41 grid)");
}

/// Random LTI-LQ problem and the independent stacked dense KKT solve.
struct Lq {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    qf: DMatrix<f64>,
    horizon: usize,
}

fn random_lq(seed: u64) -> (Lq, DVector<f64>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..4usize);
    let m = rng.random_range(1..3usize);
    let horizon = rng.random_range(1..6usize);
    let mut mat =
        |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let a = mat(n, n).scale(1.0 / n as f64) + DMatrix::identity(n, n).scale(0.5);
    let b = mat(n, m);
    let mq = mat(n, n);
    let q = &mq.transpose() * &mq + DMatrix::identity(n, n).scale(0.1);
    let mr = mat(m, m);
    let r = &mr.transpose() * &mr + DMatrix::identity(m, m).scale(0.5);
    let mqf = mat(n, n);
    let qf = &mqf.transpose() * &mqf + DMatrix::identity(n, n).scale(0.1);
    let x1 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (
        Lq {
            a,
            b,
            q,
            r,
            qf,
            horizon,
        },
        x1,
    )
}

fn lq_spec(lq: &Lq) -> ProblemSpec {
    let (a, b) = (lq.a.clone(), lq.b.clone());
    let (a2, b2) = (lq.a.clone(), lq.b.clone());
    let (q, q2) = (lq.q.clone(), lq.q.clone());
    let (r, r2) = (lq.r.clone(), lq.r.clone());
    let (qf, qf2) = (lq.qf.clone(), lq.qf.clone());
    ProblemSpec::builder(lq.a.nrows(), lq.b.ncols(), lq.horizon)
        .dynamics(
            move |x, u| &a * x + &b * u,
            move |_, _| a2.clone(),
            move |_, _| b2.clone(),
        )
        .stage_cost(
            move |x, u| 0.5 * x.dot(&(&q * x)) + 0.5 * u.dot(&(&r * u)),
            move |x, _| &q2 * x,
            move |_, u| &r2 * u,
        )
        .terminal_cost(move |x| 0.5 * x.dot(&(&qf * x)), move |x| &qf2 * x)
        .build()
        .unwrap()
}

fn lq_kkt_inputs(lq: &Lq, x1: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = lq.a.nrows();
    let m = lq.b.ncols();
    let t = lq.horizon;
    let dim = t * (m + 2 * n);
    let u_off = |k: usize| (k - 1) * m;
    let x_off = |k: usize| t * m + (k - 2) * n;
    let p_off = |k: usize| t * m + t * n + (k - 2) * n;
    let mut big = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    let mut row = 0;
    for k in 1..=t {
        for i in 0..n {
            big[(row + i, x_off(k + 1) + i)] = 1.0;
        }
        big.view_mut((row, u_off(k)), (n, m)).copy_from(&(-lq.b.clone()));
        if k == 1 {
            rhs.rows_mut(row, n).copy_from(&(&lq.a * x1));
        } else {
            big.view_mut((row, x_off(k)), (n, n)).copy_from(&(-lq.a.clone()));
        }
        row += n;
    }
    for k in 2..=t {
        for i in 0..n {
            big[(row + i, p_off(k) + i)] = 1.0;
        }
        big.view_mut((row, x_off(k)), (n, n)).copy_from(&(-lq.q.clone()));
        big.view_mut((row, p_off(k + 1)), (n, n))
            .copy_from(&(-lq.a.transpose()));
        row += n;
    }
    for i in 0..n {
        big[(row + i, p_off(t + 1) + i)] = 1.0;
    }
    big.view_mut((row, x_off(t + 1)), (n, n))
        .copy_from(&(-lq.qf.clone()));
    row += n;
    for k in 1..=t {
        big.view_mut((row, u_off(k)), (m, m)).copy_from(&lq.r);
        big.view_mut((row, p_off(k + 1)), (m, n))
            .copy_from(&lq.b.transpose());
        row += m;
    }
    assert_eq!(row, dim);
    let sol = big.full_piv_lu().solve(&rhs).expect("nonsingular KKT");
    (1..=t).map(|k| sol.rows(u_off(k), m).clone_owned()).collect()
}

#[test]
fn a7_oracle_equivalence() {
    for seed in 0..20u64 {
        let (lq, x1) = random_lq(7000 + seed);
        let spec = lq_spec(&lq);
        let cfg = ContinuationConfig {
            gamma: 0.7,
            ..Default::default()
        };
        let z0 = DecisionVector::zeros(spec.dims());
        let state = initialize(&spec, &x1, &z0, &cfg)
            .expect("A7 oracle equivalence: FAIL — initialization");
        let oracle = lq_kkt_inputs(&lq, &x1);
        for (k, u_star) in oracle.iter().enumerate() {
            let gap = (state.z.u(k + 1).clone_owned() - u_star).amax();
            assert!(
                gap <= 1e-8,
                "A7 oracle equivalence: FAIL — seed {seed}, stage {}: gap {gap:.3e}",
                k + 1
            );
        }

        let dims = spec.dims();
        let mut rng = StdRng::seed_from_u64(9000 + seed);
        let za = DecisionVector::from_vector(
            dims,
            DVector::from_fn(dims.total_len(), |_, _| rng.random_range(-1.0..1.0)),
        )
        .unwrap();
        let zb = DecisionVector::from_vector(
            dims,
            DVector::from_fn(dims.total_len(), |_, _| rng.random_range(-1.0..1.0)),
        )
        .unwrap();
        let ja = jacobian_z(&spec, &za, &x1, 0.7, JacobianMode::Analytic).unwrap();
        let jb = jacobian_z(&spec, &zb, &x1, 0.7, JacobianMode::Analytic).unwrap();
        let diff = (ja - jb).amax();
        assert!(
            diff <= 1e-10,
            "A7 oracle equivalence: FAIL — seed {seed}: jacobian varies by {diff:.3e}"
        );
    }
    println!("A7 oracle equivalence: pass (20 instances to 1e-8; jacobians constant to 1e-10)");
}

#[test]
fn a8_jacobian_correctness() {
    let spec = proxmpc::benchmark::example_plant();
    let dims = spec.dims();
    let gamma = 0.5;
    let mut rng = StdRng::seed_from_u64(88_088);
    let mut checked = 0u32;
    let mut worst_overall = 0.0f64;
    let mut attempts = 0u32;
    while checked < 20 {
        attempts += 1;
        assert!(attempts < 5000, "A8: no smooth points found");
        let z = DecisionVector::from_vector(
            dims,
            DVector::from_fn(dims.total_len(), |_, _| rng.random_range(-0.8..0.8)),
        )
        .unwrap();
        let x1 = DVector::from_fn(5, |_, _| rng.random_range(-1.5..1.5));
        let lin =
            ResidualLinearization::new(&spec, &z, &x1, gamma, StationarityForm::Proximal).unwrap();
        let mut smooth = true;
        'stages: for k in 1..=dims.horizon {
            let u = z.u(k);
            let grads = &lin.stationarity_gradients()[k - 1];
            for i in 0..dims.inputs {
                if ((u[i] - gamma * grads[i]).abs() - gamma * 4.0).abs() < 0.05 {
                    smooth = false;
                    break 'stages;
                }
            }
            if lin.stage_inequality(k).iter().any(|g| g.abs() < 0.05) {
                smooth = false;
                break 'stages;
            }
        }
        if !smooth {
            continue;
        }
        let analytic = lin.jacobian_z_matrix().unwrap();
        let fd = jacobian_z(
            &spec,
            &z,
            &x1,
            gamma,
            JacobianMode::FiniteDifference { fd_step: 1e-6 },
        )
        .unwrap();
        let mut worst = 0.0f64;
        for j in 0..analytic.ncols() {
            for i in 0..analytic.nrows() {
                let (a, b) = (analytic[(i, j)], fd[(i, j)]);
                worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
            }
        }
        assert!(
            worst < 1e-4,
            "A8 jacobian correctness: FAIL — point {checked}: max relative entry error {worst:.3e}"
        );
        worst_overall = worst_overall.max(worst);
        checked += 1;
    }
    println!("A8 jacobian correctness: pass (20 smooth points, worst entry error {worst_overall:.3e})");
}

#[test]
fn a9_solver_cross_check() {
    let spec = proxmpc::benchmark::example_plant();
    let cfg = ContinuationConfig::default();
    let x1 = DVector::from_vec(vec![6.0, -8.0, 3.0, -2.0, 5.0]);
    let z0 = DecisionVector::zeros(spec.dims());
    let mut state = initialize(&spec, &x1, &z0, &cfg).unwrap();
    let mut x = x1.clone();
    let gmres_cfg = LinearSolverConfig {
        method: SolveMethod::Gmres,
        gmres_restart: spec.dims().total_len(),
        gmres_tol: 1e-10,
        gmres_max_iter: 4 * spec.dims().total_len(),
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for step in 0..400 {
        let u = state.z.u(1).clone_owned();
        let x_pred = spec.dynamics(&x, &u);
        let lin = ResidualLinearization::new(&spec, &state.z, &x, cfg.gamma, cfg.form).unwrap();
        let rhs = -lin.apply_x1(&(&x_pred - &x)) - lin.base_residual().scale(cfg.zeta_c);
        let jac = lin.jacobian_z_matrix().unwrap();
        let d_lu = lu_solve(&jac, &rhs).unwrap();
        let (d_gm, report) = gmres_solve(|v| lin.apply_z(v), &rhs, &gmres_cfg);
        assert!(
            report.converged,
            "A9 solver cross-check: FAIL — gmres stalled at step {step}"
        );
        let rel = (&d_gm - &d_lu).norm() / d_lu.norm().max(1e-300);
        assert!(
            rel <= 1e-6,
            "A9 solver cross-check: FAIL — step {step}: solutions differ by {rel:.3e}"
        );
        worst = worst.max(rel);
        let (next, _) = proxmpc::continuation_step(&spec, &state, &x, &cfg).unwrap();
        state = next;
        x = spec.dynamics(&x, &u);
    }
    println!("A9 solver cross-check: pass (400 steps, worst relative difference {worst:.3e})");
}

#[test]
fn a10_feasibility_and_determinism() {
    let (trace, _) = &*PROPOSED_RUN;
    let mut worst = 0.0f64;
    for record in &trace.records {
        worst = worst.max(record.input.amax());
    }
    assert!(
        worst <= 1.0 + 1e-3,
        "A10 feasibility: FAIL — max |u_i| = {worst:.6}"
    );

    // determinism: a fresh run byte-matches the shared one on every column
    // except the wall-clock timing field
    let fresh = run_experiment(&proposed_config()).unwrap();
    let strip_wall = |csv: &str| -> String {
        csv.lines()
            .map(|line| {
                let mut cols: Vec<&str> = line.split(',').collect();
                cols.pop(); // wall_us
                cols.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip_wall(&render_trace_csv(trace));
    let b = strip_wall(&render_trace_csv(&fresh));
    assert!(
        a == b,
        "A10 determinism: FAIL — repeated runs differ outside the timing column"
    );
    println!("A10 feasibility + determinism: pass (max |u_i| = {worst:.6}; traces byte-identical modulo wall_us)");
}
