//! Complementarity (NCP) functions for the inequality rows of the residual
//! system: `φ(a, b) = 0  ⇔  a ≥ 0, b ≥ 0, ab = 0`.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// The available complementarity functions. Only Fischer–Burmeister ships;
/// the enumeration leaves room for alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NcpFunction {
    #[default]
    FischerBurmeister,
}

impl NcpFunction {
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            NcpFunction::FischerBurmeister => ncp_eval(a, b),
        }
    }

    pub fn partials(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            NcpFunction::FischerBurmeister => ncp_partials(a, b),
        }
    }
}

/// Fischer–Burmeister: `a + b − √(a² + b²)`.
pub fn ncp_eval(a: f64, b: f64) -> f64 {
    a + b - a.hypot(b)
}

/// Partial derivatives `(1 − a/√(a²+b²), 1 − b/√(a²+b²))`.
///
/// At the origin the function is not differentiable; the symmetric element
/// `(1 − 1/√2, 1 − 1/√2)` (the limit along `a = b > 0`) is selected so the
/// Jacobian stays bounded in degenerate complementarity.
pub fn ncp_partials(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        let d = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        (d, d)
    } else {
        (1.0 - a / r, 1.0 - b / r)
    }
}

/// Elementwise Fischer–Burmeister over paired entries. The caller passes the
/// negated inequality values as the first argument, so a feasible pair with
/// complementary slackness maps to zero.
pub fn psi(g_neg: &DVector<f64>, mu: &DVector<f64>) -> Result<DVector<f64>> {
    if g_neg.len() != mu.len() {
        return Err(Error::dimension("psi", g_neg.len(), mu.len()));
    }
    Ok(DVector::from_fn(g_neg.len(), |i, _| {
        ncp_eval(g_neg[i], mu[i])
    }))
}
