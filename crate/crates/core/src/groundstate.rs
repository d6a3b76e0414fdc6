//! Radial ground state of `-ΔU + U = U^p` in `R^N`.
//!
//! For `N = 1` the profile is the closed-form soliton
//! `U(x) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1)x/2)`. For `N ≥ 2` the
//! central value `U(0)` is located by bisection between trajectories that
//! cross zero and trajectories that turn upward; the resulting profile is then
//! polished by matching an outward integration from the origin against an
//! inward integration from the truncation radius seeded by the Bessel-type
//! tail, which removes the exponential instability of pure shooting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ProblemParams, Regime};
use crate::profile::RadialProfile;
use crate::quad;

pub const DEFAULT_RADIUS: f64 = 40.0;
pub const DEFAULT_STEP: f64 = 1.0 / 200.0;
/// RK4 substeps per grid interval in the shooting integrator.
const SUBSTEPS: usize = 4;
/// Finer substeps for `r < 1`, where the `(N-1)/r` coefficient is stiff.
const INNER_SUBSTEPS: usize = 32;
const BISECTION_WIDTH: f64 = 1e-13;
/// The origin is handled by the power series up to this radius.
const SERIES_RADIUS: f64 = 0.05;
const SERIES_TERMS: usize = 24;
/// Relative spread above which the decay plateau is reported as unresolved.
pub const PLATEAU_SPREAD_WARN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub radius: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { radius: DEFAULT_RADIUS, step: DEFAULT_STEP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub params: ProblemParams,
    pub profile: RadialProfile,
    /// `σ₀`, half of `∫_{R^N} U²`.
    pub sigma0: f64,
    /// Amplitude of `U(r) ~ 𝔠 r^{-(N-1)/2} e^{-r}`.
    pub frak_c: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    Shooting,
}

impl GroundState {
    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn p(&self) -> f64 {
        self.params.p()
    }

    pub fn u(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    pub fn du(&self, r: f64) -> f64 {
        self.profile.eval_deriv(r)
    }

    /// Max ODE residual over interior nodes. The closed-form profile is
    /// checked against its own analytic second derivative; shooting profiles
    /// by sixth-order differences.
    pub fn ode_residual(&self) -> f64 {
        let p = self.p();
        match self.method {
            Method::ClosedForm => self
                .profile
                .nodes()
                .iter()
                .skip(1)
                .map(|&x| {
                    let (u, _) = soliton_1d(p, x);
                    (-soliton_1d_second_derivative(p, x) + u - signed_pow(u, p)).abs()
                })
                .fold(0.0, f64::max),
            Method::Shooting => {
                self.profile.max_radial_residual(self.dim(), |_, _, u| u - signed_pow(u, p))
            }
        }
    }
}

pub(crate) fn signed_pow(u: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 64.0 {
        u.powi(p as i32)
    } else {
        u.signum() * u.abs().powf(p)
    }
}

/// Closed-form one-dimensional soliton `(U(x), U'(x))`.
pub fn soliton_1d(p: f64, x: f64) -> (f64, f64) {
    let amp = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
    let beta = 2.0 / (p - 1.0);
    let kappa = (p - 1.0) / 2.0;
    let z = kappa * x.abs();
    // sech^β(z) without overflow
    let log_sech = std::f64::consts::LN_2 - z - (-2.0 * z).exp().ln_1p();
    let u = amp * (beta * log_sech).exp();
    let du = -beta * kappa * z.tanh() * u;
    (u, if x < 0.0 { -du } else { du })
}

/// `U''` of the closed-form soliton, differentiated directly (not via the ODE).
pub fn soliton_1d_second_derivative(p: f64, x: f64) -> f64 {
    let beta = 2.0 / (p - 1.0);
    let kappa = (p - 1.0) / 2.0;
    let z = kappa * x.abs();
    let (u, du) = soliton_1d(p, x.abs());
    let sech = 1.0 / z.cosh();
    -beta * kappa * (kappa * sech * sech * u + z.tanh() * du)
}

/// Decay amplitude of the closed-form soliton, `U(x) ~ 𝔠 e^{-|x|}`.
pub fn soliton_1d_decay_constant(p: f64) -> f64 {
    ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0)) * 2f64.powf(2.0 / (p - 1.0))
}

/// Solves `-ΔU + U = U^p` on the default grid (`R = 40`, `h = 1/200`).
pub fn solve_ground_state(params: ProblemParams, accuracy: f64) -> Result<GroundState> {
    solve_ground_state_on(params, GridConfig::default(), accuracy)
}

pub fn solve_ground_state_on(params: ProblemParams, grid: GridConfig, accuracy: f64) -> Result<GroundState> {
    if params.dim() == 1 {
        closed_form_ground_state(params, grid)
    } else {
        shooting_ground_state(params, grid, accuracy)
    }
}

fn validate_grid(grid: GridConfig) -> Result<()> {
    if !(grid.step > 0.0 && grid.radius > 10.0 * grid.step) {
        return Err(Error::InvalidInput(format!("bad radial grid {grid:?}")));
    }
    Ok(())
}

fn closed_form_ground_state(params: ProblemParams, grid: GridConfig) -> Result<GroundState> {
    validate_grid(grid)?;
    let p = params.p();
    let nodes = RadialProfile::uniform_nodes(grid.radius, grid.step);
    let profile = RadialProfile::from_fn(nodes, |r| soliton_1d(p, r).0, |r| soliton_1d(p, r).1, -1.0, 0.0)?;
    let sigma0 = 0.5 * profile.radial_inner(&profile, 1);
    Ok(GroundState {
        params,
        profile,
        sigma0,
        frak_c: soliton_1d_decay_constant(p),
        method: Method::ClosedForm,
    })
}

/// Shooting solution for any `N` (including `N = 1`, used to cross-check the
/// closed form).
pub fn shooting_ground_state(params: ProblemParams, grid: GridConfig, accuracy: f64) -> Result<GroundState> {
    validate_grid(grid)?;
    let shooter = Shooter::new(params, grid);
    let (a0, trajectory) = shooter.bisect()?;
    let (a, c, out, inward, i_match) = shooter.polish(a0, &trajectory)?;
    let n = shooter.n_nodes();
    let mut values = Vec::with_capacity(n);
    let mut dvalues = Vec::with_capacity(n);
    for i in 0..n {
        let (u, du) = if i <= i_match { out[i] } else { inward[i - i_match] };
        values.push(u);
        dvalues.push(du);
    }
    debug_assert!((values[0] - a).abs() < 1e-12);
    let nodes = RadialProfile::uniform_nodes(grid.radius, grid.step);
    let dim = params.dim();
    let profile = RadialProfile::new(nodes, values, dvalues, -1.0, -(dim as f64 - 1.0) / 2.0)?;
    let sigma0 = 0.5 * profile.radial_inner(&profile, dim);
    let gs = GroundState { params, profile, sigma0, frak_c: c, method: Method::Shooting };
    if gs.profile.values().iter().any(|&u| u <= 0.0)
        || gs.profile.dvalues()[1..].iter().any(|&d| d >= 0.0)
    {
        return Err(Error::NoConvergence("shooting profile is not positive and decreasing".into()));
    }
    let residual = gs.ode_residual();
    if !(residual <= accuracy) {
        return Err(Error::NoConvergence(format!(
            "ground-state residual {residual:.3e} above requested accuracy {accuracy:.3e}"
        )));
    }
    Ok(gs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fate {
    CrossesZero,
    TurnsUpward,
    Undecided,
}

struct Shooter {
    dim: f64,
    p: f64,
    h: f64,
    radius: f64,
}

type State = (f64, f64);

impl Shooter {
    fn new(params: ProblemParams, grid: GridConfig) -> Self {
        Self { dim: params.dim() as f64, p: params.p(), h: grid.step, radius: grid.radius }
    }

    fn n_nodes(&self) -> usize {
        (self.radius / self.h).round() as usize + 1
    }

    fn rhs(&self, r: f64, (u, du): State) -> State {
        (du, -(self.dim - 1.0) * du / r + u - signed_pow(u, self.p))
    }

    fn rk4(&self, r: f64, y: State, dr: f64) -> State {
        let k1 = self.rhs(r, y);
        let k2 = self.rhs(r + 0.5 * dr, (y.0 + 0.5 * dr * k1.0, y.1 + 0.5 * dr * k1.1));
        let k3 = self.rhs(r + 0.5 * dr, (y.0 + 0.5 * dr * k2.0, y.1 + 0.5 * dr * k2.1));
        let k4 = self.rhs(r + dr, (y.0 + dr * k3.0, y.1 + dr * k3.1));
        (
            y.0 + dr / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y.1 + dr / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    }

    /// Even power series `U = Σ c_k r^{2k}` about the origin; `U^p` is
    /// expanded with Miller's recurrence so non-integer `p` works too.
    fn series_coefficients(&self, a: f64) -> Vec<f64> {
        let mut c = vec![a];
        let mut w = vec![signed_pow(a, self.p)];
        for k in 0..SERIES_TERMS {
            let next = (c[k] - w[k]) / (2.0 * (k as f64 + 1.0) * (2.0 * k as f64 + self.dim));
            c.push(next);
            let m = k + 1;
            let mut s = 0.0;
            for j in 1..=m {
                s += (self.p * j as f64 - (m - j) as f64) * c[j] * w[m - j];
            }
            w.push(s / (m as f64 * a));
        }
        c
    }

    fn series(&self, coeffs: &[f64], r: f64) -> State {
        let x = r * r;
        let (mut u, mut du) = (0.0, 0.0);
        for (k, ck) in coeffs.iter().enumerate().rev() {
            u = u * x + ck;
            if k > 0 {
                du = du * x + 2.0 * k as f64 * ck;
            }
        }
        // du accumulated Σ 2k c_k x^{k-1}; one factor of r restores U'
        (u, du * r)
    }

    /// Outward trajectory sampled at grid nodes, stopped at the first node
    /// where its fate is decided (or at `stop_node`).
    fn outward(&self, a: f64, stop_node: usize, classify: bool) -> (Vec<State>, Fate) {
        let coeffs = self.series_coefficients(a);
        let series_nodes = ((SERIES_RADIUS / self.h).round() as usize).max(1).min(stop_node);
        let mut samples: Vec<State> = (0..series_nodes)
            .map(|i| self.series(&coeffs, i as f64 * self.h))
            .collect();
        let mut y = *samples.last().unwrap();
        for i in series_nodes - 1..stop_node.saturating_sub(1) {
            if classify {
                if y.0 < 0.0 {
                    return (samples, Fate::CrossesZero);
                }
                if y.1 > 0.0 {
                    return (samples, Fate::TurnsUpward);
                }
            }
            let r0 = i as f64 * self.h;
            let substeps = if r0 < 1.0 { INNER_SUBSTEPS } else { SUBSTEPS };
            let dr = self.h / substeps as f64;
            for sub in 0..substeps {
                y = self.rk4(r0 + sub as f64 * dr, y, dr);
            }
            samples.push(y);
        }
        let fate = if !classify {
            Fate::Undecided
        } else if y.0 < 0.0 {
            Fate::CrossesZero
        } else if y.1 > 0.0 {
            Fate::TurnsUpward
        } else {
            Fate::Undecided
        };
        (samples, fate)
    }

    fn bisect(&self) -> Result<(f64, Vec<State>)> {
        let last = self.n_nodes() - 1;
        let mut lo = 1.0;
        let mut hi = 2.0;
        let mut doublings = 0;
        loop {
            let (_, fate) = self.outward(hi, last, true);
            if fate == Fate::CrossesZero {
                break;
            }
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 40 {
                return Err(Error::NoConvergence(
                    "no zero-crossing trajectory found while doubling U(0)".into(),
                ));
            }
        }
        let mut iterations = 0;
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match self.outward(mid, last, true).1 {
                Fate::CrossesZero => hi = mid,
                Fate::TurnsUpward | Fate::Undecided => lo = mid,
            }
            iterations += 1;
            if iterations > 400 {
                return Err(Error::NoConvergence("bisection iteration budget exhausted".into()));
            }
        }
        let a = 0.5 * (lo + hi);
        let (trajectory, _) = self.outward(a, last, true);
        Ok((a, trajectory))
    }

    /// Normalized decaying tail `r^{-(N-1)/2} e^{-r} S(r)` from the asymptotic
    /// series of `K_ν`, `ν = (N-2)/2`, with its derivative.
    fn tail(&self, r: f64) -> State {
        let nu = (self.dim - 2.0) / 2.0;
        let mu = 4.0 * nu * nu;
        let (mut s, mut ds, mut term) = (1.0, 0.0, 1.0);
        for k in 1..8 {
            let odd = (2 * k - 1) as f64;
            term *= (mu - odd * odd) / (k as f64 * 8.0);
            s += term / r.powi(k);
            ds -= k as f64 * term / r.powi(k + 1);
        }
        let base = r.powf(-(self.dim - 1.0) / 2.0) * (-r).exp();
        let value = base * s;
        let deriv = base * (ds + s * (-(self.dim - 1.0) / (2.0 * r) - 1.0));
        (value, deriv)
    }

    /// Inward trajectory from the truncation radius down to node `i_match`,
    /// returned in increasing radius order.
    fn inward(&self, c: f64, i_match: usize) -> Vec<State> {
        let last = self.n_nodes() - 1;
        let dr = self.h / SUBSTEPS as f64;
        let t = self.tail(self.radius);
        let mut y = (c * t.0, c * t.1);
        let mut samples = vec![y];
        for i in (i_match..last).rev() {
            let r0 = (i + 1) as f64 * self.h;
            for sub in 0..SUBSTEPS {
                y = self.rk4(r0 - sub as f64 * dr, y, -dr);
            }
            samples.push(y);
        }
        samples.reverse();
        samples
    }

    #[allow(clippy::type_complexity)]
    fn polish(&self, a0: f64, trajectory: &[State]) -> Result<(f64, f64, Vec<State>, Vec<State>, usize)> {
        let threshold = 0.05 * a0;
        let i_match = trajectory
            .iter()
            .position(|&(u, _)| u < threshold)
            .unwrap_or(trajectory.len() - 1)
            .max(10);
        let r_m = i_match as f64 * self.h;
        let t = self.tail(r_m);
        let mut c = trajectory[i_match].0 / t.0;
        let mut a = a0;

        let mismatch = |a: f64, c: f64| -> (State, Vec<State>, Vec<State>) {
            let (out, _) = self.outward(a, i_match + 1, false);
            let inn = self.inward(c, i_match);
            let mo = out[i_match];
            let mi = inn[0];
            ((mo.0 - mi.0, mo.1 - mi.1), out, inn)
        };

        for _ in 0..40 {
            let (f, out, inn) = mismatch(a, c);
            let scale = trajectory[i_match].0.abs().max(1e-300);
            if f.0.abs().max(f.1.abs()) <= 1e-14 * scale.max(1.0) * 10.0 {
                return Ok((a, c, out, inn, i_match));
            }
            let da = 1e-7 * a;
            let dc = 1e-7 * c;
            let (fa, _, _) = mismatch(a + da, c);
            let (fc, _, _) = mismatch(a, c + dc);
            let j = [[(fa.0 - f.0) / da, (fc.0 - f.0) / dc], [(fa.1 - f.1) / da, (fc.1 - f.1) / dc]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(Error::NoConvergence("singular matching Jacobian".into()));
            }
            let step_a = (f.0 * j[1][1] - f.1 * j[0][1]) / det;
            let step_c = (j[0][0] * f.1 - j[1][0] * f.0) / det;
            a -= step_a;
            c -= step_c;
            if step_a.abs() <= 1e-15 * a && step_c.abs() <= 1e-15 * c.abs() {
                let (_, out, inn) = mismatch(a, c);
                return Ok((a, c, out, inn, i_match));
            }
        }
        Err(Error::NoConvergence("two-sided matching did not converge".into()))
    }
}

/// `σ₀` with `2σ₀ = ∫_{R^N} U²`, by radial Simpson plus tail integral.
pub fn mass_sigma0(gs: &GroundState) -> f64 {
    0.5 * gs.profile.radial_inner(&gs.profile, gs.dim())
}

/// Plateau of `r^{(N-1)/2} e^r U(r)` over the outer third of the grid.
pub fn decay_constant(gs: &GroundState) -> Result<f64> {
    let (value, spread) = decay_plateau(gs)?;
    if spread > PLATEAU_SPREAD_WARN {
        log::warn!(
            "decay plateau not flat: relative spread {spread:.3e} exceeds {PLATEAU_SPREAD_WARN:e}"
        );
    }
    Ok(value)
}

/// Plateau mean and relative spread of `r^{(N-1)/2} e^r U(r)`.
pub fn decay_plateau(gs: &GroundState) -> Result<(f64, f64)> {
    let radius = gs.profile.radius();
    let start = 2.0 * radius / 3.0;
    let half_dim = (gs.dim() as f64 - 1.0) / 2.0;
    let samples: Vec<f64> = gs
        .profile
        .nodes()
        .iter()
        .zip(gs.profile.values())
        .filter(|(&r, _)| r >= start)
        .map(|(&r, &u)| r.powf(half_dim) * r.exp() * u)
        .collect();
    if radius < 10.0 || samples.len() < 5 || samples.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::TailNotResolved(format!(
            "outer third of a grid of radius {radius} has {} usable samples",
            samples.len()
        )));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    Ok((mean, (hi - lo) / mean))
}

/// `v(x) = λ^{1/(p-1)} U(λ^{1/2} x)` and its mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSolution {
    pub lambda: f64,
    pub profile: RadialProfile,
    pub mass: f64,
}

pub fn scale_solution(gs: &GroundState, lambda: f64) -> Result<ScaledSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda = {lambda} must be positive")));
    }
    let p = gs.p();
    let sqrt_l = lambda.sqrt();
    let amp = lambda.powf(1.0 / (p - 1.0));
    let prof = &gs.profile;
    let profile = RadialProfile::new(
        prof.nodes().iter().map(|r| r / sqrt_l).collect(),
        prof.values().iter().map(|u| amp * u).collect(),
        prof.dvalues().iter().map(|d| amp * sqrt_l * d).collect(),
        prof.tail_rate() * sqrt_l,
        prof.tail_power(),
    )?;
    let mass = lambda.powf(gs.params.mass_scaling_exponent()) * 2.0 * gs.sigma0;
    Ok(ScaledSolution { lambda, profile, mass })
}

/// Measured `∫ v²` of a scaled profile.
pub fn measured_mass(gs: &GroundState, scaled: &ScaledSolution) -> f64 {
    scaled.profile.radial_inner(&scaled.profile, gs.dim())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PureScaling {
    /// The unique frequency solving `ρ = λ^{2/(p-1) - N/2} 2σ₀`.
    Unique(f64),
    /// Mass-critical with `ρ = 2σ₀`: every `λ > 0` works.
    AnyLambda,
}

/// Relative tolerance for `ρ = 2σ₀` in the mass-critical case.
pub const CRITICAL_MASS_TOL: f64 = 1e-9;

pub fn solve_pure_scaling(gs: &GroundState, rho: f64) -> Result<PureScaling> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidInput(format!("rho = {rho} must be positive")));
    }
    let two_sigma0 = 2.0 * gs.sigma0;
    match gs.params.regime() {
        Regime::MassCritical => {
            if (rho - two_sigma0).abs() <= CRITICAL_MASS_TOL * two_sigma0 {
                Ok(PureScaling::AnyLambda)
            } else {
                Err(Error::MassCriticalInfeasible { rho, two_sigma0 })
            }
        }
        _ => {
            let e = gs.params.mass_scaling_exponent();
            Ok(PureScaling::Unique((rho / two_sigma0).powf(1.0 / e)))
        }
    }
}

/// Radial quadrature cross-check: fourth-order corrected trapezoid of
/// `r^{N-1} U²` using the derivative samples for the endpoint correction.
pub fn sigma0_trapezoid(gs: &GroundState) -> f64 {
    let prof = &gs.profile;
    let h = prof.uniform_step().expect("uniform grid");
    let dim = gs.dim() as i32;
    let f = |r: f64, u: f64| r.powi(dim - 1) * u * u;
    let df = |r: f64, u: f64, du: f64| {
        let lead = if dim == 1 { 0.0 } else { (dim - 1) as f64 * r.powi(dim - 2) * u * u };
        lead + 2.0 * r.powi(dim - 1) * u * du
    };
    let vals: Vec<f64> = prof.nodes().iter().zip(prof.values()).map(|(&r, &u)| f(r, u)).collect();
    let n = prof.len() - 1;
    let da = if dim == 2 { prof.values()[0].powi(2) } else { 0.0 };
    let db = df(prof.nodes()[n], prof.values()[n], prof.dvalues()[n]);
    0.5 * quad::sphere_area(gs.dim()) * quad::corrected_trapezoid(&vals, h, da, db)
}
