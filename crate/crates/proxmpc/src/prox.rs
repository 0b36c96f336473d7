//! Proximal operators, subdifferential membership tests, and generalized
//! derivatives of prox maps for the supported regularizers.
//!
//! The central identity used by the solver is the prox reformulation of the
//! stationarity inclusion: `g ∈ ∂r(x)` holds exactly when
//! `x = prox_γ^r(x + γ g)` for any `γ > 0` that keeps the prox subproblem
//! strongly convex. For the scaled ℓ₁ norm the prox map is soft-thresholding
//! and the identity holds for every `γ > 0`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Default absolute tolerance for subdifferential membership tests. Membership
/// is a test-side predicate, not part of the solve path, so a tight tolerance
/// is affordable.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Custom prox evaluation: `(v, gamma) -> prox` or an error message.
pub type ProxFn =
    Arc<dyn Fn(&DVector<f64>, f64) -> std::result::Result<DVector<f64>, String> + Send + Sync>;
/// Custom membership test: `(x, g) -> g ∈ ∂r(x)`.
pub type MembershipFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> bool + Send + Sync>;
/// Custom generalized prox derivative: `(v, gamma) -> diagonal entries in [0, 1]`.
pub type ProxDerivativeFn = Arc<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + Send + Sync>;

/// The regularizer `r` of the stage costs. Values are immutable after
/// construction and safe to share across threads.
#[derive(Clone)]
pub enum Regularizer {
    /// `r ≡ 0`; the prox map is the identity.
    Zero,
    /// `r(u) = weight · ‖u‖₁` with `weight > 0`.
    ScaledL1 { weight: f64 },
    /// User-supplied prox map with optional membership test and generalized
    /// derivative. Operations needing an absent callback report a capability
    /// error.
    Custom {
        prox: ProxFn,
        membership: Option<MembershipFn>,
        derivative: Option<ProxDerivativeFn>,
    },
}

impl fmt::Debug for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularizer::Zero => write!(f, "Zero"),
            Regularizer::ScaledL1 { weight } => write!(f, "ScaledL1({weight})"),
            Regularizer::Custom {
                membership,
                derivative,
                ..
            } => write!(
                f,
                "Custom {{ membership: {}, derivative: {} }}",
                membership.is_some(),
                derivative.is_some()
            ),
        }
    }
}

impl Regularizer {
    /// `r(u) = weight · ‖u‖₁`. Fails for non-positive or non-finite weights.
    pub fn scaled_l1(weight: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::invalid(
                "regularizer weight",
                format!("must be a positive finite real, got {weight}"),
            ));
        }
        Ok(Regularizer::ScaledL1 { weight })
    }

    pub fn validate(&self) -> Result<()> {
        if let Regularizer::ScaledL1 { weight } = self {
            if !(*weight > 0.0) || !weight.is_finite() {
                return Err(Error::invalid(
                    "regularizer weight",
                    format!("must be a positive finite real, got {weight}"),
                ));
            }
        }
        Ok(())
    }
}

/// Elementwise `sgn(v_i) · max(|v_i| − threshold, 0)`.
///
/// Total for `threshold ≥ 0`; the boundary `|v_i| = threshold` maps to an
/// exact zero.
pub fn soft_threshold(v: &DVector<f64>, threshold: f64) -> DVector<f64> {
    assert!(threshold >= 0.0, "soft_threshold requires threshold >= 0");
    v.map(|x| {
        if x > threshold {
            x - threshold
        } else if x < -threshold {
            x + threshold
        } else {
            0.0
        }
    })
}

/// `prox_γ^r(v)`: the unique minimizer of `r(x) + (1/2γ)‖x − v‖²`.
pub fn prox_eval(reg: &Regularizer, v: &DVector<f64>, gamma: f64) -> Result<DVector<f64>> {
    check_gamma(gamma)?;
    match reg {
        Regularizer::Zero => Ok(v.clone()),
        Regularizer::ScaledL1 { weight } => Ok(soft_threshold(v, gamma * weight)),
        Regularizer::Custom { prox, .. } => prox(v, gamma).map_err(Error::CustomCallback),
    }
}

/// Tests `g ∈ ∂r(x)` with the default absolute tolerance.
pub fn subgradient_contains(reg: &Regularizer, x: &DVector<f64>, g: &DVector<f64>) -> Result<bool> {
    subgradient_contains_with_tol(reg, x, g, DEFAULT_MEMBERSHIP_TOL)
}

/// Tests `g ∈ ∂r(x)` within absolute tolerance `tol`.
///
/// For the scaled ℓ₁ norm: `g_i = weight · sgn(x_i)` where `x_i ≠ 0` and
/// `|g_i| ≤ weight` where `x_i = 0`.
pub fn subgradient_contains_with_tol(
    reg: &Regularizer,
    x: &DVector<f64>,
    g: &DVector<f64>,
    tol: f64,
) -> Result<bool> {
    if x.len() != g.len() {
        return Err(Error::dimension("subgradient_contains", x.len(), g.len()));
    }
    match reg {
        Regularizer::Zero => Ok(g.iter().all(|gi| gi.abs() <= tol)),
        Regularizer::ScaledL1 { weight } => {
            Ok(x.iter().zip(g.iter()).all(|(&xi, &gi)| {
                if xi == 0.0 {
                    gi.abs() <= weight + tol
                } else {
                    (gi - weight * xi.signum()).abs() <= tol
                }
            }))
        }
        Regularizer::Custom { membership, .. } => match membership {
            Some(cb) => Ok(cb(x, g)),
            None => Err(Error::Capability {
                capability: "subgradient membership test",
            }),
        },
    }
}

/// Diagonal of a generalized Jacobian of `v ↦ prox_γ^r(v)`.
///
/// For the scaled ℓ₁ norm the entry is 0 on the dead zone `|v_i| ≤ γ·weight`
/// and 1 outside. The kink `|v_i| = γ·weight` takes the flat branch (entry 0),
/// which zeroes the corresponding search direction and keeps switched-off
/// inputs switched off.
pub fn prox_generalized_jacobian(
    reg: &Regularizer,
    v: &DVector<f64>,
    gamma: f64,
) -> Result<DVector<f64>> {
    check_gamma(gamma)?;
    match reg {
        Regularizer::Zero => Ok(DVector::from_element(v.len(), 1.0)),
        Regularizer::ScaledL1 { weight } => {
            let threshold = gamma * weight;
            Ok(v.map(|x| if x.abs() <= threshold { 0.0 } else { 1.0 }))
        }
        Regularizer::Custom { derivative, .. } => match derivative {
            Some(cb) => Ok(cb(v, gamma)),
            None => Err(Error::Capability {
                capability: "generalized prox derivative",
            }),
        },
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(
            "gamma",
            format!("must be a positive finite real, got {gamma}"),
        ));
    }
    Ok(())
}
