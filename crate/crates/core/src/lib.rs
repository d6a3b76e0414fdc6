//! Mass-normalized solutions `(λ, v)` of
//!
//! ```text
//! -Δv + (V(x) + λ) v = v^p,   v > 0,   ∫ v² = ρ
//! ```
//!
//! on intervals and on the real line, together with the radial ground state
//! `-ΔU + U = U^p` they concentrate to, the linearized correction profiles,
//! the explicit one-dimensional boundary layers, and numerical checks of the
//! concentration asymptotics against a direct finite-difference solver.
//!
//! The Hopf-Cole bridge in [`mfg`] maps every normalized solution to an
//! ergodic mean field game equilibrium with quadratic Hamiltonian and back.

// `!(x > y)` is how NaN-rejecting guards are written throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod boundary_layer;
pub mod corrections;
pub mod error;
pub mod exec;
pub mod groundstate;
pub mod linalg;
pub mod mfg;
pub mod nls_bvp;
pub mod params;
pub mod profile;
pub mod quad;
pub mod roots;

pub use error::{Error, Result};
pub use exec::Execution;
pub use params::{ProblemParams, Regime};
pub use profile::RadialProfile;

/// Catalan's constant `G = Σ (-1)^k / (2k+1)²`.
pub const CATALAN: f64 = 0.915_965_594_177_219;
