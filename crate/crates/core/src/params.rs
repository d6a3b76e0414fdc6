use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for recognising `p = 1 + 4/N` from floating input.
pub const CRITICAL_EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    MassCritical,
    Supercritical,
}

/// Dimension and exponent of `-ΔU + U = U^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    dim: usize,
    p: f64,
    regime: Regime,
}

impl ProblemParams {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidParams(format!("exponent p = {p} must exceed 1")));
        }
        if dim >= 3 {
            let sobolev = (dim as f64 + 2.0) / (dim as f64 - 2.0);
            if p >= sobolev {
                return Err(Error::InvalidParams(format!(
                    "p = {p} is not Sobolev-subcritical in dimension {dim} (needs p < {sobolev})"
                )));
            }
        }
        let critical = 1.0 + 4.0 / dim as f64;
        let regime = if (p - critical).abs() <= CRITICAL_EXPONENT_TOL {
            Regime::MassCritical
        } else if p < critical {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        };
        Ok(Self { dim, p, regime })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn is_mass_critical(&self) -> bool {
        self.regime == Regime::MassCritical
    }

    /// `1 + 4/N`.
    pub fn critical_exponent(&self) -> f64 {
        1.0 + 4.0 / self.dim as f64
    }

    /// Exponent `2/(p-1) - N/2` of the pure-scaling mass law `ρ(λ) = λ^e · 2σ₀`.
    pub fn mass_scaling_exponent(&self) -> f64 {
        2.0 / (self.p - 1.0) - self.dim as f64 / 2.0
    }

    /// `q = (p-1)/2` of the associated mean field game.
    pub fn mfg_exponent(&self) -> f64 {
        (self.p - 1.0) / 2.0
    }
}
