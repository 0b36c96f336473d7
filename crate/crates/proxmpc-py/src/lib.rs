//! Python bindings: the prox/complementarity primitives and the benchmark
//! experiment runner.

use nalgebra::DVector;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use proxmpc_cli::{ExperimentConfig, Method, RunError};

fn to_py_err(err: proxmpc::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn run_err(err: RunError) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

/// Elementwise soft-thresholding `sgn(v_i) * max(|v_i| - threshold, 0)`.
#[pyfunction]
fn soft_threshold(v: Vec<f64>, threshold: f64) -> PyResult<Vec<f64>> {
    if threshold < 0.0 {
        return Err(PyValueError::new_err("threshold must be non-negative"));
    }
    Ok(proxmpc::soft_threshold(&DVector::from_vec(v), threshold)
        .iter()
        .copied()
        .collect())
}

/// Fischer-Burmeister complementarity function `a + b - sqrt(a^2 + b^2)`.
#[pyfunction]
fn fischer_burmeister(a: f64, b: f64) -> f64 {
    proxmpc::ncp_eval(a, b)
}

/// Partial derivatives of the Fischer-Burmeister function.
#[pyfunction]
fn fischer_burmeister_partials(a: f64, b: f64) -> (f64, f64) {
    proxmpc::ncp_partials(a, b)
}

/// A prox-friendly input regularizer.
#[pyclass]
struct Regularizer {
    inner: proxmpc::Regularizer,
}

#[pymethods]
impl Regularizer {
    /// The zero regularizer (prox is the identity).
    #[staticmethod]
    fn zero() -> Self {
        Regularizer {
            inner: proxmpc::Regularizer::Zero,
        }
    }

    /// `r(u) = weight * l1_norm(u)` with positive weight.
    #[staticmethod]
    fn scaled_l1(weight: f64) -> PyResult<Self> {
        Ok(Regularizer {
            inner: proxmpc::Regularizer::scaled_l1(weight).map_err(to_py_err)?,
        })
    }

    /// `prox_gamma(v)`: the unique minimizer of `r(x) + ||x - v||^2 / (2 gamma)`.
    fn prox(&self, v: Vec<f64>, gamma: f64) -> PyResult<Vec<f64>> {
        Ok(proxmpc::prox_eval(&self.inner, &DVector::from_vec(v), gamma)
            .map_err(to_py_err)?
            .iter()
            .copied()
            .collect())
    }

    /// Whether `g` lies in the subdifferential of `r` at `x`.
    fn subgradient_contains(&self, x: Vec<f64>, g: Vec<f64>) -> PyResult<bool> {
        proxmpc::subgradient_contains(&self.inner, &DVector::from_vec(x), &DVector::from_vec(g))
            .map_err(to_py_err)
    }

    /// Diagonal of a generalized Jacobian of the prox map at `v`.
    fn prox_jacobian_diag(&self, v: Vec<f64>, gamma: f64) -> PyResult<Vec<f64>> {
        Ok(
            proxmpc::prox_generalized_jacobian(&self.inner, &DVector::from_vec(v), gamma)
                .map_err(to_py_err)?
                .iter()
                .copied()
                .collect(),
        )
    }

    fn __repr__(&self) -> String {
        format!("Regularizer({:?})", self.inner)
    }
}

/// Configuration of one closed-loop benchmark experiment.
#[pyclass]
struct Config {
    inner: ExperimentConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (
        method = "proposed",
        dt = 0.05,
        horizon = 60,
        sim_steps = 400,
        x_init = None,
        reg_weight = 4.0,
        gamma = 0.5,
        zeta_c = 0.4,
        newton_steps = 3,
        newton_step_size = 0.8,
        epsilon = None,
        init_tol = 1e-6,
        init_max_iter = 100,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        method: &str,
        dt: f64,
        horizon: usize,
        sim_steps: usize,
        x_init: Option<Vec<f64>>,
        reg_weight: f64,
        gamma: f64,
        zeta_c: f64,
        newton_steps: usize,
        newton_step_size: f64,
        epsilon: Option<f64>,
        init_tol: f64,
        init_max_iter: usize,
    ) -> PyResult<Self> {
        let method = match method {
            "proposed" => Method::Proposed,
            "conventional" => Method::Conventional,
            other => {
                return Err(PyValueError::new_err(format!(
                    "method must be \"proposed\" or \"conventional\", got {other:?}"
                )))
            }
        };
        let inner = ExperimentConfig {
            method,
            dt,
            horizon,
            sim_steps,
            x_init: x_init.unwrap_or_else(|| vec![6.0, -8.0, 3.0, -2.0, 5.0]),
            reg_weight,
            gamma,
            zeta_c,
            newton_steps,
            newton_step_size,
            epsilon,
            init_tol,
            init_max_iter,
            ..Default::default()
        };
        inner
            .validate()
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Config { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(method={:?}, dt={}, horizon={}, sim_steps={})",
            self.inner.method, self.inner.dt, self.inner.horizon, self.inner.sim_steps
        )
    }
}

/// Time-indexed record of a closed-loop run.
#[pyclass]
struct Trace {
    inner: proxmpc::SimTrace,
}

#[pymethods]
impl Trace {
    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.time).collect()
    }

    /// Observed states, one row per sampling instant.
    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner
            .records
            .iter()
            .map(|r| r.state.iter().copied().collect())
            .collect()
    }

    /// Applied inputs, one row per sampling instant.
    #[getter]
    fn inputs(&self) -> Vec<Vec<f64>> {
        self.inner
            .records
            .iter()
            .map(|r| r.input.iter().copied().collect())
            .collect()
    }

    #[getter]
    fn residual_inf(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.residual_inf).collect()
    }

    #[getter]
    fn residual_l1(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.residual_l1).collect()
    }

    /// State after the final applied input.
    #[getter]
    fn final_state(&self) -> Vec<f64> {
        self.inner.final_state.iter().copied().collect()
    }

    /// Earliest time after which the channel stays below the off threshold;
    /// None if it never switches off.
    fn switch_off_time(&self, channel: usize) -> Option<f64> {
        proxmpc_cli::switch_off_time(&self.inner, channel)
    }

    /// The fixed trace CSV layout.
    fn to_csv(&self) -> String {
        proxmpc_cli::render_trace_csv(&self.inner)
    }
}

/// Runs one closed-loop experiment on the benchmark plant.
#[pyfunction]
fn run_experiment(config: &Config) -> PyResult<Trace> {
    let inner = proxmpc_cli::run_experiment(&config.inner).map_err(run_err)?;
    Ok(Trace { inner })
}

/// Runs two configurations on a shared plant and returns
/// `(per_step_ratios, median_ratio_final_half)` of their residual 1-norms.
#[pyfunction]
fn compare_methods(first: &Config, second: &Config) -> PyResult<(Vec<f64>, f64)> {
    let comparison =
        proxmpc_cli::compare_methods(&first.inner, &second.inner).map_err(run_err)?;
    let ratios = comparison.records.iter().map(|r| r.ratio).collect();
    Ok((ratios, comparison.median_ratio_final_half))
}

/// Constraint-qualification diagnostic of the benchmark plant at an input:
/// returns `(full_row_rank, active_constraint_indices)`.
#[pyfunction]
#[pyo3(signature = (u, tol = 1e-8))]
fn benchmark_licq(u: Vec<f64>, tol: f64) -> PyResult<(bool, Vec<usize>)> {
    if u.len() != proxmpc::benchmark::INPUT_DIM {
        return Err(PyValueError::new_err(format!(
            "expected {} input entries",
            proxmpc::benchmark::INPUT_DIM
        )));
    }
    let spec = proxmpc::benchmark::example_plant();
    let report = proxmpc::licq_check(&spec, &DVector::from_vec(u), tol);
    Ok((report.full_row_rank, report.active_set))
}

#[pymodule]
fn proxmpc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(soft_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(fischer_burmeister, m)?)?;
    m.add_function(wrap_pyfunction!(fischer_burmeister_partials, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(compare_methods, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark_licq, m)?)?;
    m.add_class::<Regularizer>()?;
    m.add_class::<Config>()?;
    m.add_class::<Trace>()?;
    Ok(())
}
