//! Direct solver for the one-dimensional scaled problem
//! `-ε²u'' + (ε²V(x) + 1) u = u^p`, with `v = ε^{-2/(p-1)} u` and
//! `λ = ε^{-2}` recovering `-v'' + (V + λ) v = v^p`, `∫v² = ρ`.
//!
//! Second-order finite differences on a uniform grid, damped Newton with a
//! tridiagonal Jacobian, and an outer Brent search on `ln ε` for the mass
//! constraint. Masses are Richardson-extrapolated from grids `h` and `h/2`
//! unless disabled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::groundstate::{signed_pow, soliton_1d};
use crate::linalg::Tridiagonal;
use crate::params::ProblemParams;
use crate::quad;
use crate::roots::{brent, BrentOptions};

/// Largest `ε` accepted on a bounded interval.
pub const MAX_EPSILON_INTERVAL: f64 = 0.5;
/// Largest `ε` accepted on the line; pure-scaling answers can sit above 0.5.
pub const MAX_EPSILON_LINE: f64 = 2.0;
/// Smallest `ε` the bracketing search will visit.
pub const MIN_BRACKET_EPSILON: f64 = 0.05;
/// Where the bracketing search starts.
pub const BRACKET_START: f64 = 0.4;
const BRACKET_FACTOR: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DomainKind {
    Interval { a: f64, b: f64 },
    RealLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    /// Decay rows at the truncation of the line.
    Decay,
}

/// Polynomial potential `V(x) = Σ c_k x^k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Potential {
    coeffs: Vec<f64>,
}

impl Potential {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("potential coefficients must be finite".into()));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// `a x²`.
    pub fn quadratic(a: f64) -> Self {
        Self { coeffs: vec![0.0, 0.0, a] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn second_derivative_at_zero(&self) -> f64 {
        2.0 * self.coeffs.get(2).copied().unwrap_or(0.0)
    }

    /// Even degree with a positive leading coefficient.
    pub fn is_confining(&self) -> bool {
        let degree = self.coeffs.len().saturating_sub(1);
        degree >= 2 && degree.is_multiple_of(2) && self.coeffs[degree] > 0.0
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub bc: BoundaryKind,
    pub potential: Potential,
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64, bc: BoundaryKind) -> Result<Self> {
        let spec = Self { kind: DomainKind::Interval { a, b }, bc, potential: Potential::zero() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn real_line(potential: Potential) -> Result<Self> {
        let spec = Self { kind: DomainKind::RealLine, bc: BoundaryKind::Decay, potential };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DomainKind::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidInput(format!("interval ({a}, {b}) is empty")));
                }
                if self.bc == BoundaryKind::Decay {
                    return Err(Error::InvalidInput("an interval needs Dirichlet or Neumann conditions".into()));
                }
                if !self.potential.is_zero() {
                    return Err(Error::InvalidInput("potentials are only supported on the line".into()));
                }
            }
            DomainKind::RealLine => {
                if self.bc != BoundaryKind::Decay {
                    return Err(Error::InvalidInput("the line takes decay conditions only".into()));
                }
                if !(self.potential.is_zero() || self.potential.is_confining()) {
                    return Err(Error::InvalidInput("potential on the line must vanish or be confining".into()));
                }
            }
        }
        Ok(())
    }

    pub fn max_epsilon(&self) -> f64 {
        match self.kind {
            DomainKind::Interval { .. } => MAX_EPSILON_INTERVAL,
            DomainKind::RealLine => MAX_EPSILON_LINE,
        }
    }

    fn default_center(&self) -> f64 {
        match self.kind {
            DomainKind::Interval { a, b } => 0.5 * (a + b),
            DomainKind::RealLine => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Newton tolerance on the max-norm residual.
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub min_nodes: usize,
    /// Grid points per concentration width `ε`.
    pub points_per_width: f64,
    /// Truncation `|x| ≤ L` of the line.
    pub half_width: f64,
    /// Fixed node count, overriding the `ε`-dependent rule.
    pub nodes: Option<usize>,
    /// Richardson-extrapolate masses from grids `h` and `h/2`.
    pub extrapolate_mass: bool,
    /// Relative mass tolerance for normalized solves.
    pub mass_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 200,
            max_backtracks: 40,
            min_nodes: 2000,
            points_per_width: 60.0,
            half_width: 20.0,
            nodes: None,
            extrapolate_mass: true,
            mass_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialGuess {
    /// `U((x - ξ)/ε)`, adjusted to the boundary data.
    AnsatzInterior(f64),
    /// Spike at the right end of a Neumann interval, obtained by reflection.
    AnsatzEndpoint,
    /// Samples of `u` on the solver grid.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSolution {
    pub p: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub x: Vec<f64>,
    pub v_values: Vec<f64>,
    pub u_values: Vec<f64>,
    /// `∫v²`; extrapolated when the solver was configured to.
    pub mass: f64,
    /// Max-norm residual of the scaled equation.
    pub residual_inf: f64,
    pub concentration_point: f64,
}

impl NormalizedSolution {
    pub fn step(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn is_single_peak(&self) -> bool {
        is_single_peak(&self.u_values)
    }
}

/// Branch sample `(ε, mass, residual)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub epsilon: f64,
    pub mass: f64,
    pub residual: f64,
}

/// Node count for `ε` under `cfg`.
pub fn node_count(spec: &DomainSpec, epsilon: f64, cfg: &SolverConfig) -> usize {
    if let Some(n) = cfg.nodes {
        return n;
    }
    let len = match spec.kind {
        DomainKind::Interval { a, b } => b - a,
        DomainKind::RealLine => 2.0 * cfg.half_width,
    };
    cfg.min_nodes.max((cfg.points_per_width * len / epsilon).ceil() as usize + 1)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect()
}

pub fn grid(spec: &DomainSpec, epsilon: f64, cfg: &SolverConfig) -> Vec<f64> {
    let n = node_count(spec, epsilon, cfg);
    match spec.kind {
        DomainKind::Interval { a, b } => linspace(a, b, n),
        DomainKind::RealLine => linspace(-cfg.half_width, cfg.half_width, n),
    }
}

/// Discrete operator on a fixed grid.
struct System {
    p: f64,
    bc: BoundaryKind,
    h: f64,
    /// `ε²/h²`
    c: f64,
    /// `ε² V + 1` at the nodes
    w: Vec<f64>,
    kappa_left: f64,
    kappa_right: f64,
}

impl System {
    fn new(spec: &DomainSpec, p: f64, epsilon: f64, x: &[f64]) -> Result<Self> {
        if x.len() < 5 {
            return Err(Error::InvalidInput("grid needs at least 5 nodes".into()));
        }
        let h = x[1] - x[0];
        let uniform = x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
        if !(h > 0.0 && uniform) {
            return Err(Error::InvalidInput("grid must be uniform and increasing".into()));
        }
        let e2 = epsilon * epsilon;
        let w: Vec<f64> = x.iter().map(|&xi| e2 * spec.potential.eval(xi) + 1.0).collect();
        let kappa = |wi: f64| wi.max(0.0).sqrt() / epsilon;
        Ok(Self {
            p,
            bc: spec.bc,
            h,
            c: e2 / (h * h),
            kappa_left: kappa(w[0]),
            kappa_right: kappa(w[x.len() - 1]),
            w,
        })
    }

    fn nonlinearity(&self, u: f64) -> (f64, f64) {
        let a = signed_pow(u, self.p - 1.0).abs();
        (a * u, self.p * a)
    }

    /// Boundary row at end `i` with inward neighbour `j`.
    fn boundary_row(&self, u: &[f64], i: usize, j: usize, kappa: f64) -> (f64, f64, f64) {
        let (g, dg) = self.nonlinearity(u[i]);
        match self.bc {
            BoundaryKind::Dirichlet => (u[i], 1.0, 0.0),
            BoundaryKind::Neumann => {
                let c = self.c;
                (-c * (2.0 * u[j] - 2.0 * u[i]) + self.w[i] * u[i] - g, 2.0 * c + self.w[i] - dg, -2.0 * c)
            }
            BoundaryKind::Decay => {
                let c = self.c;
                let s = 2.0 + 2.0 * self.h * kappa;
                (-c * (2.0 * u[j] - s * u[i]) + self.w[i] * u[i] - g, c * s + self.w[i] - dg, -2.0 * c)
            }
        }
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut f = vec![0.0; n];
        f[0] = self.boundary_row(u, 0, 1, self.kappa_left).0;
        f[n - 1] = self.boundary_row(u, n - 1, n - 2, self.kappa_right).0;
        for i in 1..n - 1 {
            let (g, _) = self.nonlinearity(u[i]);
            f[i] = -self.c * (u[i + 1] - 2.0 * u[i] + u[i - 1]) + self.w[i] * u[i] - g;
        }
        f
    }

    fn jacobian(&self, u: &[f64]) -> Tridiagonal {
        let n = u.len();
        let mut j = Tridiagonal::zeros(n);
        let (_, d0, off0) = self.boundary_row(u, 0, 1, self.kappa_left);
        j.diag[0] = d0;
        j.upper[0] = off0;
        let (_, dn, offn) = self.boundary_row(u, n - 1, n - 2, self.kappa_right);
        j.diag[n - 1] = dn;
        j.lower[n - 2] = offn;
        for i in 1..n - 1 {
            let (_, dg) = self.nonlinearity(u[i]);
            j.lower[i - 1] = -self.c;
            j.diag[i] = 2.0 * self.c + self.w[i] - dg;
            j.upper[i] = -self.c;
        }
        j
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residual of the scaled equation on the grid `x`, boundary rows included.
pub fn assemble_residual(
    spec: &DomainSpec,
    params: &ProblemParams,
    epsilon: f64,
    x: &[f64],
    u: &[f64],
) -> Result<Vec<f64>> {
    check_params(params)?;
    spec.validate()?;
    if x.len() != u.len() {
        return Err(Error::InvalidInput(format!("{} nodes but {} values", x.len(), u.len())));
    }
    Ok(System::new(spec, params.p(), epsilon, x)?.residual(u))
}

fn check_params(params: &ProblemParams) -> Result<()> {
    if params.dim() != 1 {
        return Err(Error::InvalidParams("the direct solver is one-dimensional".into()));
    }
    Ok(())
}

/// Damped Newton; returns the iterate and its residual norm.
fn newton(sys: &System, mut u: Vec<f64>, cfg: &SolverConfig) -> Result<(Vec<f64>, f64)> {
    let mut f = sys.residual(&u);
    let mut norm = max_abs(&f);
    for iteration in 0..cfg.max_iter {
        if !norm.is_finite() {
            return Err(Error::NewtonDiverged { iterations: iteration, residual: norm });
        }
        if norm < cfg.tol {
            return Ok((u, norm));
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = sys.jacobian(&u).solve(&rhs)?;
        let scale = 1.0 + max_abs(&u);
        if max_abs(&delta) < 1e-14 * scale {
            // the residual has hit its roundoff floor
            return Ok((u, norm));
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let f_trial = sys.residual(&trial);
            let n_trial = max_abs(&f_trial);
            if n_trial < norm {
                u = trial;
                f = f_trial;
                norm = n_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // a full step that no longer reduces the residual means we are at
            // the roundoff floor; anything else is divergence
            // (the second-difference rows amplify rounding by ε²/h²)
            let floor = (1e3 * cfg.tol).max(16.0 * f64::EPSILON * sys.c * scale);
            if norm < floor {
                return Ok((u, norm));
            }
            return Err(Error::NewtonDiverged { iterations: iteration + 1, residual: norm });
        }
    }
    if norm < cfg.tol {
        Ok((u, norm))
    } else {
        Err(Error::NewtonDiverged { iterations: cfg.max_iter, residual: norm })
    }
}

fn check_epsilon(spec: &DomainSpec, epsilon: f64) -> Result<()> {
    let max = spec.max_epsilon();
    if !(epsilon > 0.0 && epsilon <= max) {
        return Err(Error::InvalidParams(format!("epsilon must lie in (0, {max}], got {epsilon}")));
    }
    Ok(())
}

fn ansatz(spec: &DomainSpec, p: f64, epsilon: f64, center: f64, x: &[f64]) -> Vec<f64> {
    let bump = |xi: f64| soliton_1d(p, (xi - center) / epsilon).0;
    let mut u: Vec<f64> = x.iter().map(|&xi| bump(xi)).collect();
    if spec.bc == BoundaryKind::Dirichlet {
        // subtract the linear interpolant of the boundary values
        let (a, b) = (x[0], x[x.len() - 1]);
        let (ua, ub) = (bump(a), bump(b));
        for (ui, &xi) in u.iter_mut().zip(x) {
            *ui -= (ua * (b - xi) + ub * (xi - a)) / (b - a);
        }
    }
    u
}

/// Negative values smaller than this fraction of the peak are roundoff in an
/// exponentially small tail, not a sign change.
pub const POSITIVITY_FLOOR: f64 = 1e-14;

fn check_positive(spec: &DomainSpec, u: &[f64]) -> Result<()> {
    let interior = if spec.bc == BoundaryKind::Dirichlet { &u[1..u.len() - 1] } else { u };
    let min = interior.iter().copied().fold(f64::INFINITY, f64::min);
    let peak = max_abs(u);
    if !(peak > 0.0) || min < -POSITIVITY_FLOOR * peak || (min <= 0.0 && spec.bc != BoundaryKind::Decay) {
        return Err(Error::NonPositive { min_value: min });
    }
    Ok(())
}

/// At most one sign change of the discrete derivative, ignoring flat noise.
pub fn is_single_peak(u: &[f64]) -> bool {
    let floor = 1e-13 * max_abs(u);
    let mut changes = 0;
    let mut last = 0.0f64;
    for w in u.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= floor {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            changes += 1;
        }
        last = d;
    }
    changes <= 1
}

fn concentration_point(x: &[f64], u: &[f64]) -> f64 {
    let (i, _) = u.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if i == 0 || i == u.len() - 1 {
        return x[i];
    }
    // vertex of the parabola through the three top samples
    let (a, b, c) = (u[i - 1], u[i], u[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return x[i];
    }
    x[i] + 0.5 * (a - c) / denom * (x[1] - x[0])
}

fn build_solution(p: f64, epsilon: f64, x: Vec<f64>, u: Vec<f64>, residual_inf: f64) -> NormalizedSolution {
    let scale = epsilon.powf(-2.0 / (p - 1.0));
    let v_values = u.iter().map(|ui| scale * ui).collect();
    let concentration_point = concentration_point(&x, &u);
    let mut sol = NormalizedSolution {
        p,
        lambda: epsilon.powi(-2),
        epsilon,
        x,
        v_values,
        u_values: u,
        mass: 0.0,
        residual_inf,
        concentration_point,
    };
    sol.mass = mass_of(&sol);
    sol
}

/// `ε^{-4/(p-1)} ∫u²` by Simpson (equal to `∫v²` at quadrature level).
pub fn mass_of(sol: &NormalizedSolution) -> f64 {
    let sq: Vec<f64> = sol.u_values.iter().map(|u| u * u).collect();
    sol.epsilon.powf(-4.0 / (sol.p - 1.0)) * quad::simpson(&sq, sol.step())
}

/// Newton solve at fixed `ε` on the grid dictated by `cfg`.
pub fn solve_fixed_epsilon(
    spec: &DomainSpec,
    params: &ProblemParams,
    epsilon: f64,
    init: &InitialGuess,
    cfg: &SolverConfig,
) -> Result<NormalizedSolution> {
    check_params(params)?;
    spec.validate()?;
    check_epsilon(spec, epsilon)?;
    let p = params.p();
    let x = grid(spec, epsilon, cfg);
    let (u, residual) = match init {
        InitialGuess::AnsatzInterior(center) => {
            let sys = System::new(spec, p, epsilon, &x)?;
            newton(&sys, ansatz(spec, p, epsilon, *center, &x), cfg)?
        }
        InitialGuess::Custom(values) => {
            if values.len() != x.len() {
                return Err(Error::InvalidInput(format!(
                    "custom guess has {} values for {} nodes",
                    values.len(),
                    x.len()
                )));
            }
            let sys = System::new(spec, p, epsilon, &x)?;
            newton(&sys, values.clone(), cfg)?
        }
        InitialGuess::AnsatzEndpoint => {
            let (a, b) = match (spec.kind, spec.bc) {
                (DomainKind::Interval { a, b }, BoundaryKind::Neumann) => (a, b),
                _ => return Err(Error::InvalidInput("endpoint concentration needs a Neumann interval".into())),
            };
            // reflect across x = b, solve for an interior spike, restrict
            let n = x.len();
            let doubled = DomainSpec { kind: DomainKind::Interval { a, b: 2.0 * b - a }, ..spec.clone() };
            let xd = linspace(a, 2.0 * b - a, 2 * n - 1);
            let sys = System::new(&doubled, p, epsilon, &xd)?;
            let (ud, res) = newton(&sys, ansatz(&doubled, p, epsilon, b, &xd), cfg)?;
            (ud[..n].to_vec(), res)
        }
    };
    check_positive(spec, &u)?;
    Ok(build_solution(p, epsilon, x, u, residual))
}

/// Cubic interpolation onto the grid with twice as many intervals.
fn refine_samples(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut out = Vec::with_capacity(2 * n - 1);
    for i in 0..n - 1 {
        out.push(u[i]);
        let mid = if i == 0 || i + 2 >= n {
            0.5 * (u[i] + u[i + 1])
        } else {
            (-u[i - 1] + 9.0 * u[i] + 9.0 * u[i + 1] - u[i + 2]) / 16.0
        };
        out.push(mid);
    }
    out.push(u[n - 1]);
    out
}

/// Solve at `ε` and, if configured, replace the mass by the Richardson value
/// from this grid and its midpoint refinement. The refined profile is
/// returned in that case.
pub fn solve_at(
    spec: &DomainSpec,
    params: &ProblemParams,
    epsilon: f64,
    init: &InitialGuess,
    cfg: &SolverConfig,
) -> Result<NormalizedSolution> {
    let coarse = solve_fixed_epsilon(spec, params, epsilon, init, cfg)?;
    if !cfg.extrapolate_mass {
        return Ok(coarse);
    }
    let fine_cfg = SolverConfig { nodes: Some(2 * coarse.x.len() - 1), ..cfg.clone() };
    let guess = InitialGuess::Custom(refine_samples(&coarse.u_values));
    let mut fine = solve_fixed_epsilon(spec, params, epsilon, &guess, &fine_cfg)?;
    fine.mass = (4.0 * fine.mass - coarse.mass) / 3.0;
    Ok(fine)
}

/// `2σ₀ = ∫_R U²` for the one-dimensional soliton.
pub fn two_sigma0_1d(p: f64) -> f64 {
    2.0 * quad::adaptive_simpson(|x| soliton_1d(p, x).0.powi(2), 0.0, 40.0, 1e-14)
}

/// Side of `2σ₀` on which normalized solutions exist at the critical exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalSide {
    Below,
    Above,
    /// Pure scaling: only `ρ = 2σ₀`, for every `λ`.
    Exactly,
}

/// Admissible side for a mass-critical spike of the given kind.
pub fn critical_side(spec: &DomainSpec, params: &ProblemParams, init: &InitialGuess) -> Option<CriticalSide> {
    if !params.is_mass_critical() || matches!(init, InitialGuess::AnsatzEndpoint) {
        return None;
    }
    match (spec.kind, spec.bc) {
        (DomainKind::Interval { .. }, BoundaryKind::Dirichlet) => Some(CriticalSide::Below),
        (DomainKind::Interval { .. }, BoundaryKind::Neumann) => Some(CriticalSide::Above),
        (DomainKind::RealLine, _) => {
            let curvature = spec.potential.second_derivative_at_zero();
            if spec.potential.is_zero() {
                Some(CriticalSide::Exactly)
            } else if curvature > 0.0 {
                Some(CriticalSide::Below)
            } else if curvature < 0.0 {
                Some(CriticalSide::Above)
            } else {
                None
            }
        }
        _ => None,
    }
}

pub fn default_guess(spec: &DomainSpec) -> InitialGuess {
    InitialGuess::AnsatzInterior(spec.default_center())
}

/// Normalized solution with `∫v² = ρ` on the concentrating branch.
pub fn solve_normalized(
    spec: &DomainSpec,
    params: &ProblemParams,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<NormalizedSolution> {
    solve_normalized_with(spec, params, rho, &default_guess(spec), cfg)
}

pub fn solve_normalized_with(
    spec: &DomainSpec,
    params: &ProblemParams,
    rho: f64,
    init: &InitialGuess,
    cfg: &SolverConfig,
) -> Result<NormalizedSolution> {
    check_params(params)?;
    spec.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidInput(format!("rho = {rho} must be positive")));
    }
    if let InitialGuess::Custom(_) = init {
        return Err(Error::InvalidInput("normalized solves start from an ansatz".into()));
    }
    let two_sigma0 = two_sigma0_1d(params.p());
    match critical_side(spec, params, init) {
        Some(CriticalSide::Below) if rho >= two_sigma0 => {
            return Err(Error::NoSolutionInRegime(format!(
                "concentrating solutions here have mass below 2σ₀ = {two_sigma0:.12}, requested {rho}"
            )))
        }
        Some(CriticalSide::Above) if rho <= two_sigma0 => {
            return Err(Error::NoSolutionInRegime(format!(
                "concentrating solutions here have mass above 2σ₀ = {two_sigma0:.12}, requested {rho}"
            )))
        }
        Some(CriticalSide::Exactly) => {
            if (rho - two_sigma0).abs() > crate::groundstate::CRITICAL_MASS_TOL * two_sigma0 {
                return Err(Error::MassCriticalInfeasible { rho, two_sigma0 });
            }
            return Err(Error::InvalidInput("rho = 2σ₀ on the free line: every λ > 0 is a solution".into()));
        }
        _ => {}
    }

    let eval = |eps: f64, cfg: &SolverConfig| -> Result<NormalizedSolution> {
        solve_at(spec, params, eps, init, cfg).map_err(|e| e.at_epsilon(eps))
    };
    let (lo, hi) = bracket(spec, rho, |eps| Ok(eval(eps, cfg)?.mass))?;

    // one grid for the whole root-find keeps mass(ε) smooth
    let fixed = SolverConfig { nodes: Some(node_count(spec, lo, cfg)), ..cfg.clone() };
    let opts = BrentOptions { xtol: 1e-13, ..BrentOptions::default() };
    let t = brent(|t| Ok(eval(t.exp(), &fixed)?.mass - rho), lo.ln(), hi.ln(), opts)?;
    let sol = eval(t.exp(), &fixed)?;
    if (sol.mass - rho).abs() > cfg.mass_tol * rho.max(1.0) {
        return Err(Error::NoConvergence(format!("mass {} misses target {rho}", sol.mass)));
    }
    Ok(sol)
}

/// Bracket `mass(ε) = ρ` by geometric steps from [`BRACKET_START`], in the
/// direction that moves the mass toward `ρ`.
fn bracket(spec: &DomainSpec, rho: f64, mut mass: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let max = spec.max_epsilon();
    let e0 = BRACKET_START.min(max);
    let m0 = mass(e0)?;
    if m0 == rho {
        return Ok((e0 * BRACKET_FACTOR, e0));
    }
    let e1 = e0 * BRACKET_FACTOR;
    let m1 = mass(e1)?;
    if (m1 - rho).signum() != (m0 - rho).signum() {
        return Ok((e1, e0));
    }
    // decreasing ε helps when it moved the mass toward ρ
    let downward = (m1 - m0).signum() == (rho - m0).signum();
    let (mut prev, mut eps) = if downward { (e1, e1) } else { (e0, e0) };
    let side = (m0 - rho).signum();
    loop {
        let next = if downward { eps * BRACKET_FACTOR } else { (eps / BRACKET_FACTOR).min(max) };
        if next < MIN_BRACKET_EPSILON || (!downward && eps >= max) {
            return Err(Error::BracketFailed(format!(
                "mass {rho} not reached for epsilon in [{MIN_BRACKET_EPSILON}, {max}]"
            )));
        }
        let m = mass(next)?;
        if (m - rho).signum() != side {
            return Ok(if downward { (next, prev) } else { (prev, next) });
        }
        prev = next;
        eps = next;
    }
}

/// Warm start from `prev`, rescaled about its peak to width `epsilon`.
fn rescaled_guess(prev: &NormalizedSolution, epsilon: f64, x: &[f64]) -> Vec<f64> {
    let xi = prev.concentration_point;
    let ratio = prev.epsilon / epsilon;
    let h = prev.step();
    let x0 = prev.x[0];
    let n = prev.x.len();
    x.iter()
        .map(|&xn| {
            let s = (xi + (xn - xi) * ratio).clamp(prev.x[0], prev.x[n - 1]);
            let k = (((s - x0) / h).floor() as usize).min(n - 2);
            let t = (s - prev.x[k]) / h;
            (1.0 - t) * prev.u_values[k] + t * prev.u_values[k + 1]
        })
        .collect()
}

/// Continuation along a strictly decreasing list of `ε`.
pub fn trace_branch(
    spec: &DomainSpec,
    params: &ProblemParams,
    epsilons: &[f64],
    init: &InitialGuess,
    cfg: &SolverConfig,
) -> Result<Vec<BranchPoint>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidInput("empty epsilon list".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("epsilon list must be strictly decreasing".into()));
    }
    let mut out = Vec::with_capacity(epsilons.len());
    let mut prev: Option<NormalizedSolution> = None;
    for &eps in epsilons {
        let ansatz_first = || solve_at(spec, params, eps, init, cfg);
        let sol = match (&prev, init) {
            (Some(p), InitialGuess::AnsatzInterior(_)) => {
                let x = grid(spec, eps, cfg);
                let warm = InitialGuess::Custom(rescaled_guess(p, eps, &x));
                solve_at(spec, params, eps, &warm, cfg).or_else(|_| ansatz_first())
            }
            _ => ansatz_first(),
        }
        .map_err(|e| e.at_epsilon(eps))?;
        out.push(BranchPoint { epsilon: eps, mass: sol.mass, residual: sol.residual_inf });
        prev = Some(sol);
    }
    Ok(out)
}

/// Independent solves at each `ε`, fanned out by `exec`; order is kept.
pub fn sweep(
    spec: &DomainSpec,
    params: &ProblemParams,
    epsilons: &[f64],
    init: &InitialGuess,
    cfg: &SolverConfig,
    exec: Execution,
) -> Vec<Result<BranchPoint>> {
    exec.map(epsilons, |&eps| {
        solve_at(spec, params, eps, init, cfg)
            .map(|s| BranchPoint { epsilon: eps, mass: s.mass, residual: s.residual_inf })
            .map_err(|e| e.at_epsilon(eps))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quintic() -> ProblemParams {
        ProblemParams::new(1, 5.0).unwrap()
    }

    fn cubic() -> ProblemParams {
        ProblemParams::new(1, 3.0).unwrap()
    }

    fn unit(bc: BoundaryKind) -> DomainSpec {
        DomainSpec::interval(-1.0, 1.0, bc).unwrap()
    }

    #[test]
    fn zero_is_a_solution_of_the_discrete_system() {
        for spec in [unit(BoundaryKind::Dirichlet), unit(BoundaryKind::Neumann), DomainSpec::real_line(Potential::quadratic(1.0)).unwrap()] {
            let x = grid(&spec, 0.3, &SolverConfig::default());
            let r = assemble_residual(&spec, &quintic(), 0.3, &x, &vec![0.0; x.len()]).unwrap();
            assert!(r.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn neumann_row_on_constant_is_algebraic() {
        let spec = unit(BoundaryKind::Neumann);
        let x = linspace(-1.0, 1.0, 101);
        let c = 0.7f64;
        let r = assemble_residual(&spec, &quintic(), 0.2, &x, &vec![c; 101]).unwrap();
        let expect = (1.0 - c.powi(4)) * c;
        assert_relative_eq!(r[0], expect, max_relative = 1e-12);
        assert_relative_eq!(r[100], expect, max_relative = 1e-12);
    }

    #[test]
    fn soliton_residual_is_second_order() {
        let spec = DomainSpec::real_line(Potential::zero()).unwrap();
        let res = |n: usize| {
            let x = linspace(-20.0, 20.0, n);
            let u: Vec<f64> = x.iter().map(|&xi| soliton_1d(3.0, xi).0).collect();
            max_abs(&assemble_residual(&spec, &cubic(), 1.0, &x, &u).unwrap())
        };
        let ratio = res(801) / res(1601);
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    }

    #[test]
    fn free_line_cubic_reproduces_scaled_soliton() {
        let spec = DomainSpec::real_line(Potential::zero()).unwrap();
        let cfg = SolverConfig { extrapolate_mass: false, ..Default::default() };
        let eps = 0.5;
        let sol = solve_fixed_epsilon(&spec, &cubic(), eps, &InitialGuess::AnsatzInterior(0.0), &cfg).unwrap();
        let err = sol
            .x
            .iter()
            .zip(&sol.u_values)
            .map(|(&x, &u)| (u - soliton_1d(3.0, x / eps).0).abs())
            .fold(0.0, f64::max);
        let h = sol.step() / eps;
        assert!(err < 0.5 * h * h, "err {err}");
        // mass 4/ε = 8 at λ = 4
        assert_relative_eq!(mass_of(&sol), 8.0, max_relative = 1e-3);
    }

    #[test]
    fn mass_and_profile_errors_are_second_order() {
        let spec = DomainSpec::real_line(Potential::zero()).unwrap();
        let eps = 0.5;
        let err = |n: usize| {
            let cfg = SolverConfig { nodes: Some(n), extrapolate_mass: false, ..Default::default() };
            let s = solve_fixed_epsilon(&spec, &cubic(), eps, &InitialGuess::AnsatzInterior(0.0), &cfg).unwrap();
            (s.mass - 8.0).abs()
        };
        let ratio = err(1601) / err(3201);
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    }

    #[test]
    fn extrapolated_mass_is_sharper() {
        let spec = DomainSpec::real_line(Potential::zero()).unwrap();
        let plain = SolverConfig { extrapolate_mass: false, ..Default::default() };
        let a = solve_at(&spec, &cubic(), 0.5, &default_guess(&spec), &plain).unwrap();
        let b = solve_at(&spec, &cubic(), 0.5, &default_guess(&spec), &SolverConfig::default()).unwrap();
        assert!((b.mass - 8.0).abs() < 1e-2 * (a.mass - 8.0).abs());
    }

    #[test]
    fn dirichlet_quintic_interior_spike() {
        let spec = unit(BoundaryKind::Dirichlet);
        let sol = solve_fixed_epsilon(&spec, &quintic(), 0.2, &InitialGuess::AnsatzInterior(0.0), &SolverConfig::default()).unwrap();
        assert!(sol.concentration_point.abs() < 1e-8);
        let peak = sol.u_values.iter().copied().fold(0.0, f64::max);
        assert!((peak / 3f64.powf(0.25) - 1.0).abs() < 0.02);
        assert!(sol.is_single_peak());
        assert!(sol.residual_inf < 1e-9);
        assert!(sol.mass < two_sigma0_1d(5.0));
    }

    #[test]
    fn neumann_quintic_interior_mass_exceeds_critical() {
        let spec = unit(BoundaryKind::Neumann);
        let sol = solve_at(&spec, &quintic(), 0.2, &default_guess(&spec), &SolverConfig::default()).unwrap();
        assert!(sol.mass > two_sigma0_1d(5.0));
        assert!(sol.is_single_peak());
    }

    #[test]
    fn endpoint_spike_carries_half_the_mass() {
        let spec = unit(BoundaryKind::Neumann);
        let cfg = SolverConfig::default();
        let end = solve_at(&spec, &quintic(), 0.2, &InitialGuess::AnsatzEndpoint, &cfg).unwrap();
        let mid = solve_at(&spec, &quintic(), 0.2, &default_guess(&spec), &cfg).unwrap();
        assert!((end.concentration_point - 1.0).abs() < 1e-12);
        assert!((end.mass / mid.mass - 0.5).abs() < 0.02);
        assert!(end.is_single_peak());
    }

    #[test]
    fn endpoint_requires_neumann_interval() {
        let err = solve_fixed_epsilon(&unit(BoundaryKind::Dirichlet), &quintic(), 0.2, &InitialGuess::AnsatzEndpoint, &SolverConfig::default());
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn normalized_free_line_cubic() {
        let spec = DomainSpec::real_line(Potential::zero()).unwrap();
        let sol = solve_normalized(&spec, &cubic(), 8.0, &SolverConfig::default()).unwrap();
        assert!((sol.lambda / 4.0 - 1.0).abs() < 1e-6, "lambda {}", sol.lambda);
    }

    #[test]
    fn normalized_dirichlet_quintic_sides() {
        let spec = unit(BoundaryKind::Dirichlet);
        let cfg = SolverConfig::default();
        let target = two_sigma0_1d(5.0) - 0.01;
        let sol = solve_normalized(&spec, &quintic(), target, &cfg).unwrap();
        assert!((sol.mass - target).abs() < 1e-8);
        assert!(sol.lambda > 4.0);
        let above = solve_normalized(&spec, &quintic(), target + 0.02, &cfg);
        assert!(matches!(above, Err(Error::NoSolutionInRegime(_))));
    }

    #[test]
    fn critical_free_line_is_degenerate() {
        let spec = DomainSpec::real_line(Potential::zero()).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(solve_normalized(&spec, &quintic(), 1.0, &cfg), Err(Error::MassCriticalInfeasible { .. })));
        assert!(matches!(solve_normalized(&spec, &quintic(), two_sigma0_1d(5.0), &cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn branch_masses_increase_toward_critical() {
        let spec = unit(BoundaryKind::Dirichlet);
        let eps = [0.3, 0.25, 0.2, 0.15];
        let pts = trace_branch(&spec, &quintic(), &eps, &default_guess(&spec), &SolverConfig::default()).unwrap();
        let crit = two_sigma0_1d(5.0);
        assert!(pts.windows(2).all(|w| w[1].mass > w[0].mass));
        assert!(pts.iter().all(|p| p.mass < crit));
        let single = trace_branch(&spec, &quintic(), &[0.2], &default_guess(&spec), &SolverConfig::default()).unwrap();
        let direct = solve_at(&spec, &quintic(), 0.2, &default_guess(&spec), &SolverConfig::default()).unwrap();
        assert_relative_eq!(single[0].mass, direct.mass, max_relative = 1e-10);
        assert_relative_eq!(single[0].mass, pts[2].mass, max_relative = 1e-9);
    }

    #[test]
    fn branch_rejects_non_monotone_lists() {
        let spec = unit(BoundaryKind::Dirichlet);
        let r = trace_branch(&spec, &quintic(), &[0.2, 0.3], &default_guess(&spec), &SolverConfig::default());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sweep_matches_sequential() {
        let spec = unit(BoundaryKind::Neumann);
        let eps = [0.3, 0.25, 0.2];
        let cfg = SolverConfig::default();
        let par = sweep(&spec, &quintic(), &eps, &default_guess(&spec), &cfg, Execution::Parallel);
        let seq = sweep(&spec, &quintic(), &eps, &default_guess(&spec), &cfg, Execution::Sequential);
        assert_eq!(par, seq);
    }

    #[test]
    fn potential_and_domain_validation() {
        let v = Potential::new(vec![0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(v.coeffs().len(), 4);
        assert!(!v.is_confining());
        assert!(DomainSpec::real_line(v).is_err());
        assert!(DomainSpec::interval(1.0, -1.0, BoundaryKind::Neumann).is_err());
        assert!(DomainSpec::interval(-1.0, 1.0, BoundaryKind::Decay).is_err());
        let quartic = Potential::new(vec![0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(quartic.is_confining() && !quartic.is_even());
        assert_relative_eq!(quartic.eval(2.0), 4.0 + 8.0 + 16.0);
        assert!(solve_fixed_epsilon(&unit(BoundaryKind::Neumann), &quintic(), 0.6, &default_guess(&unit(BoundaryKind::Neumann)), &SolverConfig::default()).is_err());
        assert!(solve_fixed_epsilon(&unit(BoundaryKind::Neumann), &ProblemParams::new(2, 3.0).unwrap(), 0.2, &InitialGuess::AnsatzInterior(0.0), &SolverConfig::default()).is_err());
    }

    #[test]
    fn critical_mass_value() {
        assert_relative_eq!(two_sigma0_1d(5.0), 3f64.sqrt() * std::f64::consts::PI / 2.0, max_relative = 1e-12);
        assert_relative_eq!(two_sigma0_1d(3.0), 4.0, max_relative = 1e-12);
    }
}
