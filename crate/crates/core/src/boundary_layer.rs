//! Boundary-layer correction on `(-1, 1)` for the quintic problem in one
//! dimension, concentrated at the centre.
//!
//! With `U(y) = 3^{1/4} sech^{1/2}(2y)`, the function `φ` solves
//! `-ε²φ'' + φ = 0` and carries the boundary data of `U(x/ε)`:
//!
//! * Dirichlet: `φ(x) = U(1/ε) cosh(x/ε) / cosh(1/ε)`, positive;
//! * Neumann:   `φ(x) = U'(1/ε) cosh(x/ε) / sinh(1/ε)`, negative.
//!
//! `Θ_ε = ∫ φ(εy) U(y) dy` drives the sign of the mass defect at the critical
//! exponent. Its integrand has an elementary antiderivative, so besides the
//! quadrature there is an exact form, and the leading term
//! `Θ_ε ≈ ±4√3 ε^{-1} e^{-2/ε}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::soliton_1d;
use crate::quad;

const P: f64 = 5.0;

/// Largest `ε` for which the explicit layer is offered.
pub const MAX_EPSILON: f64 = 0.5;

/// Leading constant `c` in `Θ_ε ≈ ±c ε^{-1} e^{-2/ε}`.
pub fn theta_leading_constant() -> f64 {
    4.0 * 3f64.sqrt()
}

/// The constant `4·3^{1/4}` that appears in some statements of the leading
/// term (as `8·3^{1/4}` for `-2Θ_ε`). Quadrature does not support it; see
/// [`theta_leading_constant`].
pub fn theta_quoted_constant() -> f64 {
    4.0 * 3f64.powf(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn sign(self) -> f64 {
        match self {
            Self::Dirichlet => 1.0,
            Self::Neumann => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLayer {
    pub epsilon: f64,
    pub bc: BoundaryCondition,
    /// `φ(0)`.
    pub center_value: f64,
    /// `Θ_ε` by quadrature.
    pub theta: f64,
}

impl BoundaryLayer {
    pub fn new(epsilon: f64, bc: BoundaryCondition) -> Result<Self> {
        Ok(Self { epsilon, bc, center_value: phi_explicit(epsilon, bc, 0.0)?, theta: theta_quadrature(epsilon, bc)? })
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        phi_explicit(self.epsilon, self.bc, x)
    }

    /// `-ε ln|φ(0)|`.
    pub fn viscosity_rate(&self) -> f64 {
        -self.epsilon * self.center_value.abs().ln()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(Error::InvalidParams(format!("epsilon must lie in (0, {MAX_EPSILON}], got {epsilon}")));
    }
    Ok(())
}

/// Boundary amplitude `U(1/ε)` or `U'(1/ε)` divided by `cosh(1/ε)` or
/// `sinh(1/ε)`, kept as `(mantissa, exponent)` with value `mantissa·e^{exponent}`
/// so that tiny `ε` does not overflow the hyperbolic functions.
fn amplitude(epsilon: f64, bc: BoundaryCondition) -> (f64, f64) {
    let a = 1.0 / epsilon;
    let tail = (-2.0 * a).exp();
    // ln U(a) = ln 3^{1/4} - ln cosh(2a) / 2, and U'(a) = -tanh(2a) U(a)
    let ln_cosh = 2.0 * a + (-4.0 * a).exp().ln_1p() - std::f64::consts::LN_2;
    let exponent = 0.25 * 3f64.ln() - 0.5 * ln_cosh - a;
    match bc {
        // 1/cosh(a) = 2e^{-a}/(1+e^{-2a})
        BoundaryCondition::Dirichlet => (2.0 / (1.0 + tail), exponent),
        BoundaryCondition::Neumann => (-2.0 * (2.0 * a).tanh() / (1.0 - tail), exponent),
    }
}

/// `φ(x)` on `[-1, 1]`.
pub fn phi_explicit(epsilon: f64, bc: BoundaryCondition, x: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("x = {x} outside [-1, 1]")));
    }
    let (m, e) = amplitude(epsilon, bc);
    let y = x.abs() / epsilon;
    // cosh(y) = e^y (1 + e^{-2y}) / 2
    Ok(m * 0.5 * (1.0 + (-2.0 * y).exp()) * (e + y).exp())
}

/// `φ'(x)`.
pub fn phi_explicit_derivative(epsilon: f64, bc: BoundaryCondition, x: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (m, e) = amplitude(epsilon, bc);
    let y = x.abs() / epsilon;
    Ok(x.signum() * m * 0.5 * (1.0 - (-2.0 * y).exp()) * (e + y).exp() / epsilon)
}

/// `Θ_ε = ∫_{-1/ε}^{1/ε} φ(εy) U(y) dy` by adaptive Simpson.
///
/// The amplitude `e^{-2/ε}` is factored out and the remaining integrand
/// `cosh(y) U(y)` is O(1), so the tolerance is relative to `1/ε`.
pub fn theta_quadrature(epsilon: f64, bc: BoundaryCondition) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (m, e) = amplitude(epsilon, bc);
    let a = 1.0 / epsilon;
    let integrand = |y: f64| {
        let u = soliton_1d(P, y).0;
        // cosh(y) U(y) without forming cosh(y)
        0.5 * (1.0 + (-2.0 * y).exp()) * (y + u.ln()).exp()
    };
    let half = quad::adaptive_simpson(integrand, 0.0, a, 1e-13 * a);
    Ok(2.0 * half * m * e.exp())
}

/// `Θ_ε` from the antiderivative
/// `∫ cosh y (cosh 2y)^{-1/2} dy = (1/√2) log(√2 sinh y + √(2 sinh² y + 1))`.
pub fn theta_closed_form(epsilon: f64, bc: BoundaryCondition) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (m, e) = amplitude(epsilon, bc);
    let a = 1.0 / epsilon;
    Ok(m * e.exp() * 3f64.powf(0.25) * 2f64.sqrt() * log_antiderivative(a))
}

/// `log(√2 sinh a + √(2 sinh² a + 1))`, stable for large `a`.
pub fn log_antiderivative(a: f64) -> f64 {
    let t = (-2.0 * a).exp();
    a + ((1.0 - t) / 2f64.sqrt() + ((1.0 + t * t) / 2.0).sqrt()).ln()
}

/// Leading term `±4√3 ε^{-1} e^{-2/ε}`.
pub fn theta_asymptotic(epsilon: f64, bc: BoundaryCondition) -> f64 {
    bc.sign() * theta_leading_constant() / epsilon * (-2.0 / epsilon).exp()
}

/// `ψ_ε(0) = -ε ln|φ(0)|`, which tends to twice the distance to the boundary.
pub fn viscosity_rate(epsilon: f64, bc: BoundaryCondition) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (m, e) = amplitude(epsilon, bc);
    // φ(0) = m e^{e}
    Ok(-epsilon * (m.abs().ln() + e))
}
