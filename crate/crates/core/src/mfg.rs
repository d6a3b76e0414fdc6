//! Hopf–Cole correspondence between normalized solutions and ergodic
//! mean-field-game equilibria with quadratic Hamiltonian:
//!
//! ```text
//! -ν u'' + ½ |u'|² = λ + V - α m^q,     -ν m'' - (m u')' = 0,     ∫ m = 1.
//! ```
//!
//! With `v² = α^{1/q} m = c e^{-u/ν}` the pair collapses to
//! `-2ν² v'' + (λ + V) v = v^{2q+1}`, `∫v² = α^{1/q}`. For `ν = √2/2` this is
//! the normalized problem itself; for other `ν` the line is stretched by
//! `s = √2 ν`, so the equilibrium lives on `s·Ω` with potential `V(x/s)`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nls_bvp::{self, BoundaryKind, DomainKind, DomainSpec, NormalizedSolution, Potential};
use crate::quad;

/// Viscosity for which no stretching is needed.
pub const DEFAULT_NU: f64 = FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfgTriple {
    /// Nodes of the equilibrium grid (stretched when `ν ≠ √2/2`).
    pub x: Vec<f64>,
    pub u_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub q: f64,
    pub nu: f64,
    pub residual_hjb: f64,
    pub residual_kolmogorov: f64,
    /// `|∫m - 1|`.
    pub mass_defect: f64,
}

impl MfgTriple {
    pub fn stretch(&self) -> f64 {
        stretch(self.nu)
    }

    fn step(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

fn stretch(nu: f64) -> f64 {
    2f64.sqrt() * nu
}

/// `V(x/s)` as a polynomial in `x`.
fn stretched_potential(potential: &Potential, s: f64) -> Potential {
    let coeffs = potential.coeffs().iter().enumerate().map(|(k, c)| c * s.powi(-(k as i32))).collect();
    Potential::new(coeffs).expect("finite coefficients")
}

/// Map a normalized solution to `(u, m, λ)` with `m = v²/ρ`, `α = ρ^q`,
/// `u = -2ν ln v` shifted to `min u = 0`. `ρ` is the quadrature mass of the
/// sampled `v`, so `∫m = 1` holds at quadrature level. Residuals are
/// evaluated against `spec`.
pub fn to_mfg(sol: &NormalizedSolution, spec: &DomainSpec, q: f64, nu: f64) -> Result<MfgTriple> {
    if !(q > 0.0 && nu > 0.0 && q.is_finite() && nu.is_finite()) {
        return Err(Error::InvalidParams(format!("need q > 0 and nu > 0, got q = {q}, nu = {nu}")));
    }
    if ((sol.p - 1.0) / 2.0 - q).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!("q = {q} does not match p = {} (q = (p-1)/2)", sol.p)));
    }
    let min_v = sol.v_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_v > 0.0) {
        return Err(Error::NonPositiveDensity { min_value: min_v });
    }
    let s = stretch(nu);
    let x: Vec<f64> = sol.x.iter().map(|xi| s * xi).collect();
    let h = x[1] - x[0];
    let sq: Vec<f64> = sol.v_values.iter().map(|v| v * v).collect();
    let rho = quad::simpson(&sq, h);
    let m_values: Vec<f64> = sq.iter().map(|w| w / rho).collect();
    let raw: Vec<f64> = sol.v_values.iter().map(|v| -2.0 * nu * v.ln()).collect();
    let floor = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let u_values = raw.iter().map(|u| u - floor).collect();
    let mut triple = MfgTriple {
        x,
        u_values,
        m_values,
        lambda: sol.lambda,
        alpha: rho.powf(q),
        q,
        nu,
        residual_hjb: 0.0,
        residual_kolmogorov: 0.0,
        mass_defect: 0.0,
    };
    triple.mass_defect = (quad::simpson(&triple.m_values, h) - 1.0).abs();
    let (r_hjb, r_kol) = mfg_residuals(&triple, spec)?;
    triple.residual_hjb = r_hjb;
    triple.residual_kolmogorov = r_kol;
    Ok(triple)
}

/// Inverse map: `v = (α^{1/q} m)^{1/2}` on the unstretched grid, `p = 2q + 1`.
/// The residual of the returned solution is not evaluated (`NaN`).
pub fn from_mfg(triple: &MfgTriple) -> Result<NormalizedSolution> {
    let min_m = triple.m_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_m > 0.0) {
        return Err(Error::NonPositiveDensity { min_value: min_m });
    }
    let s = triple.stretch();
    let scale = triple.alpha.powf(1.0 / triple.q);
    let v_values: Vec<f64> = triple.m_values.iter().map(|m| (scale * m).sqrt()).collect();
    let p = 2.0 * triple.q + 1.0;
    let epsilon = triple.lambda.powf(-0.5);
    let amp = epsilon.powf(2.0 / (p - 1.0));
    let x: Vec<f64> = triple.x.iter().map(|xi| xi / s).collect();
    let u_values: Vec<f64> = v_values.iter().map(|v| amp * v).collect();
    let peak = v_values.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a }).0;
    let mut sol = NormalizedSolution {
        p,
        lambda: triple.lambda,
        epsilon,
        concentration_point: x[peak],
        x,
        v_values,
        u_values,
        mass: 0.0,
        residual_inf: f64::NAN,
    };
    sol.mass = nls_bvp::mass_of(&sol);
    Ok(sol)
}

/// `ρ = α^{1/q}` and `p = 2q + 1` from the game parameters (`ν = √2/2`).
pub fn dictionary(alpha: f64, q: f64) -> (f64, f64) {
    (alpha.powf(1.0 / q), 2.0 * q + 1.0)
}

/// Max-norm finite-difference residuals `(HJB, Kolmogorov)`. Interior rows
/// use centred differences and a conservative flux form; on Neumann
/// intervals the end rows use zero-flux ghost nodes for both `u` and `m`.
///
/// On the truncated line the HJB maximum is usually attained far in the
/// tail, where `v` is known only to absolute accuracy and `ln v` is noise;
/// restrict the triple to the support of `m` to measure the equation itself.
pub fn mfg_residuals(triple: &MfgTriple, spec: &DomainSpec) -> Result<(f64, f64)> {
    let n = triple.x.len();
    if n < 3 || triple.u_values.len() != n || triple.m_values.len() != n {
        return Err(Error::InvalidInput("triple samples do not match its grid".into()));
    }
    if let DomainKind::Interval { a, b } = spec.kind {
        let s = triple.stretch();
        let tol = 1e-9 * (b - a) * s;
        if (triple.x[0] - s * a).abs() > tol || (triple.x[n - 1] - s * b).abs() > tol {
            return Err(Error::InvalidInput("triple grid does not span the domain".into()));
        }
    }
    let h = triple.step();
    let nu = triple.nu;
    let potential = stretched_potential(&spec.potential, triple.stretch());
    let u = &triple.u_values;
    let m = &triple.m_values;

    let hjb_row = |i: usize, lo: usize, hi: usize| {
        let d2 = (u[hi] - 2.0 * u[i] + u[lo]) / (h * h);
        let d1 = (u[hi] - u[lo]) / (2.0 * h);
        -nu * d2 + 0.5 * d1 * d1 - triple.lambda - potential.eval(triple.x[i]) + triple.alpha * m[i].powf(triple.q)
    };
    // flux ν m' + m u' at i + 1/2
    let flux = |i: usize| nu * (m[i + 1] - m[i]) / h + 0.5 * (m[i] + m[i + 1]) * (u[i + 1] - u[i]) / h;

    let mut r_hjb = 0.0f64;
    let mut r_kol = 0.0f64;
    for i in 1..n - 1 {
        r_hjb = r_hjb.max(hjb_row(i, i - 1, i + 1).abs());
        r_kol = r_kol.max(((flux(i) - flux(i - 1)) / h).abs());
    }
    if spec.bc == BoundaryKind::Neumann {
        // ghost nodes mirror the first interior node; the ghost flux is -flux
        r_hjb = r_hjb.max(hjb_row(0, 1, 1).abs()).max(hjb_row(n - 1, n - 2, n - 2).abs());
        r_kol = r_kol.max((2.0 * flux(0) / h).abs()).max((2.0 * flux(n - 2) / h).abs());
    }
    Ok((r_hjb, r_kol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nls_bvp::{default_guess, solve_fixed_epsilon, InitialGuess, SolverConfig};
    use crate::params::ProblemParams;
    use approx::assert_relative_eq;

    fn neumann() -> DomainSpec {
        DomainSpec::interval(-1.0, 1.0, BoundaryKind::Neumann).unwrap()
    }

    fn solve(eps: f64, nodes: Option<usize>) -> NormalizedSolution {
        let cfg = SolverConfig { nodes, extrapolate_mass: false, ..Default::default() };
        let spec = neumann();
        solve_fixed_epsilon(&spec, &ProblemParams::new(1, 5.0).unwrap(), eps, &default_guess(&spec), &cfg).unwrap()
    }

    #[test]
    fn flat_equilibrium_has_zero_residual() {
        let n = 11;
        let (alpha, q, m) = (2.0, 2.0, 0.5);
        let triple = MfgTriple {
            x: (0..n).map(|i| -1.0 + 0.2 * i as f64).collect(),
            u_values: vec![3.0; n],
            m_values: vec![m; n],
            lambda: alpha * f64::powf(m, q),
            alpha,
            q,
            nu: DEFAULT_NU,
            residual_hjb: 0.0,
            residual_kolmogorov: 0.0,
            mass_defect: 0.0,
        };
        assert_eq!(mfg_residuals(&triple, &neumann()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn normalization_and_residuals() {
        let sol = solve(0.3, Some(40001));
        let t = to_mfg(&sol, &neumann(), 2.0, DEFAULT_NU).unwrap();
        assert!(t.mass_defect < 1e-10);
        assert!(t.m_values.iter().all(|&m| m > 0.0));
        assert_eq!(t.u_values.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
        assert!(t.residual_hjb < 1e-6, "hjb {}", t.residual_hjb);
        assert!(t.residual_kolmogorov < 1e-6, "kolmogorov {}", t.residual_kolmogorov);
    }

    #[test]
    fn residuals_are_second_order() {
        let coarse = to_mfg(&solve(0.2, Some(1001)), &neumann(), 2.0, DEFAULT_NU).unwrap();
        let fine = to_mfg(&solve(0.2, Some(2001)), &neumann(), 2.0, DEFAULT_NU).unwrap();
        let hjb = coarse.residual_hjb / fine.residual_hjb;
        let kol = coarse.residual_kolmogorov / fine.residual_kolmogorov;
        assert!((hjb / 4.0 - 1.0).abs() < 0.2, "hjb ratio {hjb}");
        assert!((kol / 4.0 - 1.0).abs() < 0.2, "kolmogorov ratio {kol}");
    }

    #[test]
    fn gauge_invariance() {
        let t = to_mfg(&solve(0.25, None), &neumann(), 2.0, DEFAULT_NU).unwrap();
        let mut shifted = t.clone();
        shifted.u_values.iter_mut().for_each(|u| *u += 7.5);
        let (a, b) = mfg_residuals(&t, &neumann()).unwrap();
        let (c, d) = mfg_residuals(&shifted, &neumann()).unwrap();
        assert_relative_eq!(a, c, max_relative = 1e-6);
        assert_relative_eq!(b, d, max_relative = 1e-6);
    }

    #[test]
    fn perturbed_density_breaks_kolmogorov() {
        let t = to_mfg(&solve(0.25, None), &neumann(), 2.0, DEFAULT_NU).unwrap();
        let mut bumped = t.clone();
        let n = bumped.m_values.len();
        for (i, m) in bumped.m_values.iter_mut().enumerate() {
            let y = (i as f64 - n as f64 / 3.0) / 20.0;
            *m += 1e-3 * (-y * y).exp();
        }
        let (_, kol) = mfg_residuals(&bumped, &neumann()).unwrap();
        assert!(kol > 100.0 * t.residual_kolmogorov);
    }

    #[test]
    fn round_trip() {
        for nu in [DEFAULT_NU, 1.3] {
            let sol = solve(0.25, None);
            let back = from_mfg(&to_mfg(&sol, &neumann(), 2.0, nu).unwrap()).unwrap();
            for (a, b) in back.v_values.iter().zip(&sol.v_values) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            for (a, b) in back.x.iter().zip(&sol.x) {
                assert!((a - b).abs() < 1e-14);
            }
            assert_relative_eq!(back.lambda, sol.lambda);
            assert_relative_eq!(back.mass, nls_bvp::mass_of(&sol), max_relative = 1e-12);
        }
    }

    #[test]
    fn stretched_viscosity_keeps_residuals_small() {
        let sol = solve(0.3, Some(20001));
        let t = to_mfg(&sol, &neumann(), 2.0, 1.3).unwrap();
        assert!(t.mass_defect < 1e-10);
        assert!(t.residual_hjb < 1e-5 && t.residual_kolmogorov < 1e-5);
    }

    #[test]
    fn dictionary_values() {
        assert_eq!(dictionary(1.0, 2.0), (1.0, 5.0));
        let two_sigma0 = nls_bvp::two_sigma0_1d(5.0);
        let (rho, p) = dictionary(two_sigma0.powi(2), 2.0);
        assert_relative_eq!(rho, two_sigma0, max_relative = 1e-14);
        assert_eq!(p, 5.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = DomainSpec::interval(-1.0, 1.0, BoundaryKind::Dirichlet).unwrap();
        let cfg = SolverConfig { extrapolate_mass: false, ..Default::default() };
        let sol = solve_fixed_epsilon(&spec, &ProblemParams::new(1, 5.0).unwrap(), 0.2, &InitialGuess::AnsatzInterior(0.0), &cfg).unwrap();
        assert!(matches!(to_mfg(&sol, &spec, 2.0, DEFAULT_NU), Err(Error::NonPositiveDensity { .. })));
        let ok = solve(0.3, None);
        assert!(to_mfg(&ok, &neumann(), 1.0, DEFAULT_NU).is_err());
        let mut t = to_mfg(&ok, &neumann(), 2.0, DEFAULT_NU).unwrap();
        t.m_values[3] = -1.0;
        assert!(matches!(from_mfg(&t), Err(Error::NonPositiveDensity { .. })));
    }
}
