//! The `check` subcommand: a fast property/oracle sweep printing one
//! pass/fail line per check.

use nalgebra::{DMatrix, DVector};
use proxmpc::{
    benchmark, gmres_solve, initialize, lu_solve, ncp_eval, ncp_partials, prox_eval,
    residual, subgradient_contains_with_tol, ContinuationConfig, DecisionVector, JacobianMode,
    LinearSolverConfig, ProblemSpec, Regularizer, ResidualLinearization, SolveMethod,
    StationarityForm,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type CheckResult = Result<String, String>;

pub fn run_all() -> bool {
    let checks: Vec<(&str, fn() -> CheckResult)> = vec![
        ("prox-grid-oracle", prox_grid_oracle),
        ("prox-equivalence-forward", prox_equivalence_forward),
        ("prox-equivalence-reverse", prox_equivalence_reverse),
        ("fb-grid-characterization", fb_grid),
        ("fb-partials-fd", fb_partials_fd),
        ("lq-kkt-oracle", lq_kkt_oracle),
        ("jacobian-analytic-vs-fd", jacobian_fd),
        ("lu-gmres-cross-check", lu_gmres_cross),
        ("plant-derivative-check", plant_derivatives),
    ];
    let mut all_ok = true;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("check {name}: pass ({detail})"),
            Err(detail) => {
                all_ok = false;
                println!("check {name}: FAIL ({detail})");
            }
        }
    }
    all_ok
}

/// Closed-form soft-thresholding against brute-force minimization of the prox
/// objective on a fine grid.
fn prox_grid_oracle() -> CheckResult {
    let reg = Regularizer::scaled_l1(4.0).map_err(|e| e.to_string())?;
    let gamma = 0.5;
    let mut worst = 0.0f64;
    for &v in &[1.0, -3.0, 0.3, 2.0001, -7.5] {
        let closed = prox_eval(&reg, &DVector::from_vec(vec![v]), gamma).map_err(|e| e.to_string())?[0];
        let span = v.abs() + 1.0;
        let steps = 200_000;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=steps {
            let x = -span + 2.0 * span * (i as f64) / (steps as f64);
            let val = 4.0 * x.abs() + (x - v) * (x - v) / (2.0 * gamma);
            if val < best.0 {
                best = (val, x);
            }
        }
        worst = worst.max((closed - best.1).abs());
    }
    if worst < 5e-5 {
        Ok(format!("max gap to grid minimizer {worst:.1e}"))
    } else {
        Err(format!("gap {worst:.1e} exceeds 5e-5"))
    }
}

fn prox_equivalence_forward() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(101);
    for _ in 0..200 {
        let weight = rng.random_range(0.2..5.0);
        let reg = Regularizer::scaled_l1(weight).map_err(|e| e.to_string())?;
        let gamma = rng.random_range(0.05..2.0);
        let x_star: DVector<f64> = DVector::from_fn(4, |_, _| {
            if rng.random_bool(0.5) {
                0.0
            } else {
                rng.random_range(-3.0..3.0)
            }
        });
        let g = DVector::from_fn(4, |i, _| {
            if x_star[i] == 0.0 {
                rng.random_range(-weight..weight)
            } else {
                weight * x_star[i].signum()
            }
        });
        let back = prox_eval(&reg, &(&x_star + g.scale(gamma)), gamma).map_err(|e| e.to_string())?;
        let err = (back - &x_star).amax();
        if err > 1e-10 {
            return Err(format!("recovery error {err:.1e}"));
        }
    }
    Ok("200 samples within 1e-10".into())
}

fn prox_equivalence_reverse() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(202);
    for _ in 0..200 {
        let weight = rng.random_range(0.2..5.0);
        let reg = Regularizer::scaled_l1(weight).map_err(|e| e.to_string())?;
        let gamma = rng.random_range(0.05..2.0);
        let v = DVector::from_fn(4, |_, _| rng.random_range(-5.0..5.0));
        let x = prox_eval(&reg, &v, gamma).map_err(|e| e.to_string())?;
        let g = (&v - &x).scale(1.0 / gamma);
        if !subgradient_contains_with_tol(&reg, &x, &g, 1e-10).map_err(|e| e.to_string())? {
            return Err("membership failed".into());
        }
    }
    Ok("200 samples in the subdifferential".into())
}

fn fb_grid() -> CheckResult {
    for i in 0..=40 {
        for j in 0..=40 {
            let a = (i as f64 - 20.0) * 0.1;
            let b = (j as f64 - 20.0) * 0.1;
            let on_set = a >= 0.0 && b >= 0.0 && a * b == 0.0;
            if (ncp_eval(a, b).abs() <= 1e-12) != on_set {
                return Err(format!("characterization breaks at ({a}, {b})"));
            }
        }
    }
    Ok("41x41 grid characterization matches".into())
}

fn fb_partials_fd() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(303);
    let h = 1e-6;
    for _ in 0..200 {
        let a: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        if a.hypot(b) <= 1e-3 {
            continue;
        }
        let (da, db) = ncp_partials(a, b);
        let fa = (ncp_eval(a + h, b) - ncp_eval(a - h, b)) / (2.0 * h);
        let fb = (ncp_eval(a, b + h) - ncp_eval(a, b - h)) / (2.0 * h);
        if (da - fa).abs() / (1.0 + fa.abs()) > 1e-5 || (db - fb).abs() / (1.0 + fb.abs()) > 1e-5 {
            return Err(format!("partials off at ({a:.3}, {b:.3})"));
        }
    }
    Ok("partials match central differences".into())
}

/// Small random LTI-LQ instances: the residual root equals the stacked dense
/// KKT solution.
fn lq_kkt_oracle() -> CheckResult {
    for seed in 0..3u64 {
        let mut rng = StdRng::seed_from_u64(900 + seed);
        let n = 2;
        let m = 1;
        let horizon = 3;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5))
            + DMatrix::identity(n, n).scale(0.5);
        let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let x1 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));

        let (a2, b2) = (a.clone(), b.clone());
        let (a3, b3) = (a.clone(), b.clone());
        let spec = ProblemSpec::builder(n, m, horizon)
            .dynamics(
                move |x, u| &a2 * x + &b2 * u,
                move |_, _| a3.clone(),
                move |_, _| b3.clone(),
            )
            .stage_cost(
                |x, u| 0.5 * x.dot(x) + 0.5 * u.dot(u),
                |x, _| x.clone(),
                |_, u| u.clone(),
            )
            .terminal_cost(|x| 0.5 * x.dot(x), |x| x.clone())
            .build()
            .map_err(|e| e.to_string())?;

        // stacked KKT over (u, x2.., p2..)
        let dim = horizon * (m + 2 * n);
        let u_off = |k: usize| (k - 1) * m;
        let x_off = |k: usize| horizon * m + (k - 2) * n;
        let p_off = |k: usize| horizon * m + horizon * n + (k - 2) * n;
        let mut big = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        let mut row = 0;
        for k in 1..=horizon {
            for i in 0..n {
                big[(row + i, x_off(k + 1) + i)] = 1.0;
            }
            big.view_mut((row, u_off(k)), (n, m)).copy_from(&(-b.clone()));
            if k == 1 {
                rhs.rows_mut(row, n).copy_from(&(&a * &x1));
            } else {
                big.view_mut((row, x_off(k)), (n, n)).copy_from(&(-a.clone()));
            }
            row += n;
        }
        for k in 2..=horizon {
            for i in 0..n {
                big[(row + i, p_off(k) + i)] = 1.0;
                big[(row + i, x_off(k) + i)] = -1.0;
            }
            big.view_mut((row, p_off(k + 1)), (n, n)).copy_from(&(-a.transpose()));
            row += n;
        }
        for i in 0..n {
            big[(row + i, p_off(horizon + 1) + i)] = 1.0;
            big[(row + i, x_off(horizon + 1) + i)] = -1.0;
        }
        row += n;
        for k in 1..=horizon {
            for i in 0..m {
                big[(row + i, u_off(k) + i)] = 1.0;
            }
            big.view_mut((row, p_off(k + 1)), (m, n)).copy_from(&b.transpose());
            row += m;
        }
        let sol = big
            .full_piv_lu()
            .solve(&rhs)
            .ok_or("singular stacked KKT system")?;

        let cfg = ContinuationConfig {
            gamma: 0.7,
            ..Default::default()
        };
        let z0 = DecisionVector::zeros(spec.dims());
        let state = initialize(&spec, &x1, &z0, &cfg).map_err(|e| e.to_string())?;
        for k in 1..=horizon {
            let gap = (state.z.u(k).clone_owned() - sol.rows(u_off(k), m).clone_owned()).amax();
            if gap > 1e-8 {
                return Err(format!("seed {seed}: input gap {gap:.1e} at stage {k}"));
            }
        }
    }
    Ok("3 instances match the dense solve to 1e-8".into())
}

fn jacobian_fd() -> CheckResult {
    let spec = benchmark::example_plant();
    let mut rng = StdRng::seed_from_u64(404);
    let dims = spec.dims();
    let gamma = 0.5;
    let mut checked = 0;
    'outer: while checked < 2 {
        let z = DecisionVector::from_vector(
            dims,
            DVector::from_fn(dims.total_len(), |_, _| rng.random_range(-0.8..0.8)),
        )
        .map_err(|e| e.to_string())?;
        let x1 = DVector::from_fn(5, |_, _| rng.random_range(-1.5..1.5));
        let lin = ResidualLinearization::new(&spec, &z, &x1, gamma, StationarityForm::Proximal)
            .map_err(|e| e.to_string())?;
        for k in 1..=dims.horizon {
            let u = z.u(k);
            let grads = &lin.stationarity_gradients()[k - 1];
            for i in 0..dims.inputs {
                if ((u[i] - gamma * grads[i]).abs() - gamma * 4.0).abs() < 0.05 {
                    continue 'outer;
                }
            }
            if lin.stage_inequality(k).iter().any(|g| g.abs() < 0.05) {
                continue 'outer;
            }
        }
        let analytic = proxmpc::jacobian_z(&spec, &z, &x1, gamma, JacobianMode::Analytic)
            .map_err(|e| e.to_string())?;
        let fd = proxmpc::jacobian_z(
            &spec,
            &z,
            &x1,
            gamma,
            JacobianMode::FiniteDifference { fd_step: 1e-6 },
        )
        .map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for j in 0..analytic.ncols() {
            for i in 0..analytic.nrows() {
                let (a, b) = (analytic[(i, j)], fd[(i, j)]);
                worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
            }
        }
        if worst > 1e-4 {
            return Err(format!("entry error {worst:.1e}"));
        }
        checked += 1;
    }
    Ok("2 smooth points under 1e-4".into())
}

fn lu_gmres_cross() -> CheckResult {
    let spec = benchmark::example_plant();
    let cfg = ContinuationConfig::default();
    let x1 = DVector::from_vec(vec![6.0, -8.0, 3.0, -2.0, 5.0]);
    let z0 = DecisionVector::zeros(spec.dims());
    let state = initialize(&spec, &x1, &z0, &cfg).map_err(|e| e.to_string())?;
    let u1 = state.z.u(1).clone_owned();
    let x_pred = spec.dynamics(&x1, &u1);
    let lin = ResidualLinearization::new(&spec, &state.z, &x1, cfg.gamma, cfg.form)
        .map_err(|e| e.to_string())?;
    let rhs = -lin.apply_x1(&(&x_pred - &x1)) - lin.base_residual().scale(cfg.zeta_c);
    let jac = lin.jacobian_z_matrix().map_err(|e| e.to_string())?;
    let d_lu = lu_solve(&jac, &rhs).map_err(|e| e.to_string())?;
    let gmres_cfg = LinearSolverConfig {
        method: SolveMethod::Gmres,
        gmres_restart: rhs.len(),
        gmres_tol: 1e-10,
        gmres_max_iter: 4 * rhs.len(),
        ..Default::default()
    };
    let (d_gm, report) = gmres_solve(|v| lin.apply_z(v), &rhs, &gmres_cfg);
    if !report.converged {
        return Err(format!(
            "gmres stalled at relative residual {:.1e}",
            report.relative_residual
        ));
    }
    let rel = (&d_gm - &d_lu).norm() / d_lu.norm().max(1e-300);
    if rel < 1e-6 {
        Ok(format!("solutions agree to {rel:.1e} in {} iterations", report.iterations))
    } else {
        Err(format!("solver mismatch {rel:.1e}"))
    }
}

fn plant_derivatives() -> CheckResult {
    let spec = benchmark::example_plant();
    let mut rng = StdRng::seed_from_u64(505);
    let h = 1e-6;
    for _ in 0..5 {
        let x = DVector::from_fn(5, |_, _| rng.random_range(-3.0..3.0));
        let u = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let jac_x = spec.dynamics_jac_x(&x, &u);
        let jac_u = spec.dynamics_jac_u(&x, &u);
        for j in 0..5 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (spec.dynamics(&xp, &u) - spec.dynamics(&xm, &u)).scale(1.0 / (2.0 * h));
            for i in 0..5 {
                if (jac_x[(i, j)] - col[i]).abs() / (1.0 + col[i].abs()) > 1e-5 {
                    return Err(format!("state jacobian entry ({i},{j})"));
                }
            }
        }
        for j in 0..2 {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let col = (spec.dynamics(&x, &up) - spec.dynamics(&x, &um)).scale(1.0 / (2.0 * h));
            for i in 0..5 {
                if (jac_u[(i, j)] - col[i]).abs() / (1.0 + col[i].abs()) > 1e-5 {
                    return Err(format!("input jacobian entry ({i},{j})"));
                }
            }
        }
        let grad_x = spec.stage_cost_grad_x(&x, &u);
        let grad_u = spec.stage_cost_grad_u(&x, &u);
        for j in 0..5 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (spec.stage_cost(&xp, &u) - spec.stage_cost(&xm, &u)) / (2.0 * h);
            if (grad_x[j] - fd).abs() / (1.0 + fd.abs()) > 1e-5 {
                return Err(format!("stage cost gradient (x{j})"));
            }
        }
        for j in 0..2 {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let fd = (spec.stage_cost(&x, &up) - spec.stage_cost(&x, &um)) / (2.0 * h);
            if (grad_u[j] - fd).abs() / (1.0 + fd.abs()) > 1e-5 {
                return Err(format!("stage cost gradient (u{j})"));
            }
        }
    }
    // residual at the regulated origin is exactly zero
    let z = DecisionVector::zeros(spec.dims());
    let f = residual(&spec, &z, &DVector::zeros(5), 0.5).map_err(|e| e.to_string())?;
    if f.amax() != 0.0 {
        return Err("origin residual is not exactly zero".into());
    }
    Ok("5 random points to 1e-5; origin residual exact".into())
}
