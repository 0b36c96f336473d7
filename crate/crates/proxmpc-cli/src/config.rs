//! Experiment configuration: parsed from a TOML document whose keys mirror
//! the struct fields exactly; unknown keys are rejected.

use std::path::PathBuf;

use proxmpc::{ContinuationConfig, LinearSolverConfig, SolveMethod, StationarityForm};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    DenseLu,
    Gmres,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub method: SolverKind,
    pub gmres_restart: usize,
    pub gmres_tol: f64,
    pub gmres_max_iter: usize,
    pub fd_step: f64,
    pub tikhonov: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let defaults = LinearSolverConfig::default();
        SolverSettings {
            method: SolverKind::DenseLu,
            gmres_restart: defaults.gmres_restart,
            gmres_tol: defaults.gmres_tol,
            gmres_max_iter: defaults.gmres_max_iter,
            fd_step: defaults.fd_step,
            tikhonov: defaults.tikhonov,
        }
    }
}

impl SolverSettings {
    pub fn to_solver_config(&self) -> LinearSolverConfig {
        LinearSolverConfig {
            method: match self.method {
                SolverKind::DenseLu => SolveMethod::DenseLu,
                SolverKind::Gmres => SolveMethod::Gmres,
            },
            gmres_restart: self.gmres_restart,
            gmres_tol: self.gmres_tol,
            gmres_max_iter: self.gmres_max_iter,
            fd_step: self.fd_step,
            tikhonov: self.tikhonov,
        }
    }
}

/// One closed-loop experiment on the benchmark plant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub method: Method,
    /// Sampling period in seconds.
    pub dt: f64,
    /// Prediction horizon in steps.
    pub horizon: usize,
    pub sim_steps: usize,
    pub x_init: Vec<f64>,
    /// Weight of the ℓ₁ input regularizer.
    pub reg_weight: f64,
    pub gamma: f64,
    pub zeta_c: f64,
    pub newton_steps: usize,
    pub newton_step_size: f64,
    /// Smoothing width of the conventional method; required exactly when
    /// `method = "conventional"`.
    pub epsilon: Option<f64>,
    pub init_tol: f64,
    pub init_max_iter: usize,
    /// Reserved; the benchmark is deterministic.
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub solver: SolverSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let controller = ContinuationConfig::default();
        ExperimentConfig {
            method: Method::Proposed,
            dt: proxmpc::benchmark::DEFAULT_DT,
            horizon: proxmpc::benchmark::DEFAULT_HORIZON,
            sim_steps: 400,
            x_init: vec![6.0, -8.0, 3.0, -2.0, 5.0],
            reg_weight: proxmpc::benchmark::DEFAULT_L1_WEIGHT,
            gamma: controller.gamma,
            zeta_c: controller.zeta_c,
            newton_steps: controller.newton_steps,
            newton_step_size: controller.newton_step_size,
            epsilon: None,
            init_tol: controller.init_tol,
            init_max_iter: controller.init_max_iter,
            seed: 0,
            out_dir: None,
            solver: SolverSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |field: &'static str, reason: String| ConfigError::Field { field, reason };
        if !(self.dt > 0.0) {
            return Err(field("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.horizon < 1 {
            return Err(field("horizon", "must be at least 1".into()));
        }
        if self.sim_steps < 1 {
            return Err(field("sim_steps", "must be at least 1".into()));
        }
        if self.x_init.len() != proxmpc::benchmark::STATE_DIM {
            return Err(field(
                "x_init",
                format!(
                    "must have {} entries, got {}",
                    proxmpc::benchmark::STATE_DIM,
                    self.x_init.len()
                ),
            ));
        }
        if self.x_init.iter().any(|v| !v.is_finite()) {
            return Err(field("x_init", "entries must be finite".into()));
        }
        if !(self.reg_weight > 0.0) {
            return Err(field("reg_weight", "must be positive".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(field("gamma", "must be positive".into()));
        }
        if !(self.zeta_c > 0.0) {
            return Err(field("zeta_c", "must be positive".into()));
        }
        if !(self.newton_step_size > 0.0 && self.newton_step_size <= 1.0) {
            return Err(field("newton_step_size", "must lie in (0, 1]".into()));
        }
        match (self.method, self.epsilon) {
            (Method::Conventional, None) => {
                return Err(field(
                    "epsilon",
                    "required for the conventional method".into(),
                ));
            }
            (Method::Conventional, Some(eps)) if !(eps > 0.0) => {
                return Err(field("epsilon", "must be positive".into()));
            }
            (Method::Proposed, Some(_)) => {
                return Err(field(
                    "epsilon",
                    "only used by the conventional method; remove it for proposed".into(),
                ));
            }
            _ => {}
        }
        if !(self.init_tol > 0.0) {
            return Err(field("init_tol", "must be positive".into()));
        }
        if self.init_max_iter < 1 {
            return Err(field("init_max_iter", "must be at least 1".into()));
        }
        if !(self.solver.gmres_tol > 0.0 && self.solver.gmres_tol < 1.0) {
            return Err(field("solver.gmres_tol", "must lie in (0, 1)".into()));
        }
        if !(self.solver.fd_step > 0.0) {
            return Err(field("solver.fd_step", "must be positive".into()));
        }
        if self.solver.gmres_restart < 1 {
            return Err(field("solver.gmres_restart", "must be at least 1".into()));
        }
        if self.solver.gmres_max_iter < 1 {
            return Err(field("solver.gmres_max_iter", "must be at least 1".into()));
        }
        if self.solver.tikhonov < 0.0 {
            return Err(field("solver.tikhonov", "must be non-negative".into()));
        }
        Ok(())
    }

    pub fn to_controller_config(&self) -> ContinuationConfig {
        ContinuationConfig {
            zeta_c: self.zeta_c,
            gamma: self.gamma,
            newton_steps: self.newton_steps,
            newton_step_size: self.newton_step_size,
            init_tol: self.init_tol,
            init_max_iter: self.init_max_iter,
            solver: self.solver.to_solver_config(),
            form: match self.method {
                Method::Proposed => StationarityForm::Proximal,
                Method::Conventional => StationarityForm::Smoothed {
                    epsilon: self.epsilon.unwrap_or(1e-2),
                },
            },
        }
    }

    pub fn to_problem(&self) -> proxmpc::ProblemSpec {
        proxmpc::benchmark::example_plant_with(self.dt, self.horizon, self.reg_weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml("method = \"proposed\"\nbogus = 1\n");
        assert!(err.is_err());
    }

    #[test]
    fn zero_sim_steps_rejected() {
        let cfg = ExperimentConfig {
            sim_steps: 0,
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, ConfigError::Field { field: "sim_steps", .. }));
    }

    #[test]
    fn epsilon_requirement_is_two_sided() {
        let mut cfg = ExperimentConfig {
            method: Method::Conventional,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.epsilon = Some(1e-2);
        assert!(cfg.validate().is_ok());
        cfg.method = Method::Proposed;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip_with_nesting() {
        let text = r#"
method = "conventional"
epsilon = 0.01
sim_steps = 10

[solver]
method = "gmres"
gmres_restart = 40
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.method, Method::Conventional);
        assert_eq!(cfg.solver.method, SolverKind::Gmres);
        assert_eq!(cfg.solver.gmres_restart, 40);
        assert_eq!(cfg.sim_steps, 10);
        // untouched fields keep their defaults
        assert_eq!(cfg.horizon, 60);
        cfg.validate().unwrap();
    }
}
