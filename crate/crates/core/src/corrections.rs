//! Radial linearized problems `-ΔW + W - p U^{p-1} W = f` and the constant
//! `𝔪 = (1/2N) ∫ U W` for the source `f = |y|² U`.
//!
//! Only the radial source is ever solved: for a potential with Hessian
//! `diag(a_i)` at its critical point, `∫ W_ξ U = 𝔪 ΔV(ξ)`, so the anisotropic
//! correction enters the mass through `𝔪` alone.
//!
//! The boundary value problem is discretized by second-order central
//! differences (symmetric stencil at the origin, Robin condition
//! `W'(R) = -W(R)` through a ghost node) and solved on three nested grids;
//! two Richardson steps bring the result to sixth order on the base grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::{signed_pow, soliton_1d, soliton_1d_second_derivative, GroundState};
use crate::linalg::Tridiagonal;
use crate::params::ProblemParams;
use crate::profile::RadialProfile;
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionProfile {
    pub params: ProblemParams,
    /// `W` solving `-ΔW + W - p U^{p-1} W = |y|² U`.
    pub profile: RadialProfile,
    pub m_frak: f64,
    /// First sign change of `W`, when there is exactly one.
    pub w_zero: Option<f64>,
}

impl CorrectionProfile {
    pub fn w(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }
}

/// The source `|y|² U(y)` sampled on the ground-state grid.
pub fn radial_source(gs: &GroundState) -> RadialProfile {
    let prof = &gs.profile;
    let values = prof.nodes().iter().zip(prof.values()).map(|(r, u)| r * r * u).collect();
    let dvalues = prof
        .nodes()
        .iter()
        .zip(prof.values().iter().zip(prof.dvalues()))
        .map(|(r, (u, du))| 2.0 * r * u + r * r * du)
        .collect();
    RadialProfile::new(prof.nodes().to_vec(), values, dvalues, prof.tail_rate(), prof.tail_power() + 2.0)
        .expect("source inherits a valid grid")
}

/// Solution on a grid of `n` intervals of width `k` over `[0, R]`.
fn solve_level(gs: &GroundState, rhs: &RadialProfile, intervals: usize, k: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = intervals + 1;
    let dim = gs.dim() as f64;
    let p = gs.p();
    let big_r = intervals as f64 * k;
    let k2 = k * k;
    let mut a = Tridiagonal::zeros(n);
    let mut f = vec![0.0; n];
    for i in 0..n {
        let r = i as f64 * k;
        let q = 1.0 - p * signed_pow(gs.u(r), p - 1.0);
        f[i] = rhs.eval(r);
        if i == 0 {
            // filled below, once row 1 is known
            a.diag[0] = q;
        } else if i == n - 1 {
            // ghost node W_n = W_{n-2} - 2k W_{n-1}
            a.lower[i - 1] = -2.0 / k2;
            a.diag[i] = (2.0 + 2.0 * k) / k2 + (dim - 1.0) / big_r + q;
        } else {
            let adv = (dim - 1.0) / (2.0 * k * r);
            a.lower[i - 1] = -1.0 / k2 + adv;
            a.diag[i] = 2.0 / k2 + q;
            a.upper[i] = -1.0 / k2 - adv;
        }
    }
    // Origin row -(a(W_1-W_0) + b(W_2-W_0))/k² + q W_0 = f_0: its k² error term
    // matches the r → 0 limit of the interior rows', so the discrete error has
    // a smooth expansion up to the origin. W_2 is eliminated through row 1.
    let ca = (4.0 * dim + 2.0) / 3.0;
    let cb = (dim - 1.0) / 6.0;
    let (l1, d1, u1) = (a.lower[0], a.diag[1], a.upper[1]);
    let elim = cb / (k2 * u1);
    a.diag[0] += (ca + cb) / k2 + elim * l1;
    a.upper[0] = -ca / k2 + elim * d1;
    f[0] += elim * f[1];
    let w = a.solve(&f)?;
    let mut dw = vec![0.0; n];
    for i in 1..n - 1 {
        dw[i] = (w[i + 1] - w[i - 1]) / (2.0 * k);
    }
    dw[n - 1] = -w[n - 1];
    Ok((w, dw))
}

fn richardson(coarse: &[f64], fine: &[f64], stride: usize, order: i32) -> Vec<f64> {
    let factor = 2f64.powi(order);
    coarse
        .iter()
        .enumerate()
        .map(|(i, c)| (factor * fine[i * stride] - c) / (factor - 1.0))
        .collect()
}

/// Decaying radial solution of `-ΔW - (N-1)W'/r + W - pU^{p-1}W = rhs` with
/// `W'(0) = 0`, on the ground-state grid.
pub fn solve_linearized_radial(gs: &GroundState, rhs: &RadialProfile) -> Result<RadialProfile> {
    let h = gs.profile.uniform_step().ok_or_else(|| Error::InvalidInput("ground state grid is not uniform".into()))?;
    if rhs.len() != gs.profile.len() || rhs.uniform_step().is_none_or(|k| (k - h).abs() > 1e-12 * h) {
        return Err(Error::InvalidInput("rhs must be sampled on the ground-state grid".into()));
    }
    let intervals = gs.profile.len() - 1;
    let (w1, d1) = solve_level(gs, rhs, intervals, h)?;
    let (w2, d2) = solve_level(gs, rhs, 2 * intervals, h / 2.0)?;
    let (w4, d4) = solve_level(gs, rhs, 4 * intervals, h / 4.0)?;

    let combine = |a: &[f64], b: &[f64], c: &[f64]| {
        let r1 = richardson(a, b, 2, 2);
        let b_on_coarse: Vec<f64> = (0..a.len()).map(|i| b[2 * i]).collect();
        let r2 = richardson(&b_on_coarse, c, 4, 2);
        richardson(&r1, &r2, 1, 4)
    };
    let values = combine(&w1, &w2, &w4);
    let dvalues = combine(&d1, &d2, &d4);
    let tail_power = if rhs.values().iter().all(|&v| v == 0.0) { 0.0 } else { rhs.tail_power() + 1.0 };
    let nodes = gs.profile.nodes().to_vec();
    RadialProfile::new(nodes, values, dvalues, -1.0, tail_power)
}

/// Max linearized residual over interior nodes.
pub fn linearized_residual(gs: &GroundState, w: &RadialProfile, rhs: &RadialProfile) -> f64 {
    let p = gs.p();
    let u = gs.profile.values();
    let f = rhs.values();
    w.max_radial_residual(gs.dim(), |i, _, wi| (1.0 - p * signed_pow(u[i], p - 1.0)) * wi - f[i])
}

/// `𝔪 = (1/2N) ∫_{R^N} U W`.
pub fn compute_m_frak(gs: &GroundState, w: &RadialProfile) -> f64 {
    gs.profile.radial_inner(w, gs.dim()) / (2.0 * gs.dim() as f64)
}

/// `∫_0^upper U(r) W(r) dr` (no angular factor) by Simpson on grid nodes.
pub fn truncated_inner(gs: &GroundState, w: &RadialProfile, upper: f64) -> f64 {
    let h = gs.profile.uniform_step().expect("uniform grid");
    let m = (upper / h).round() as usize;
    let vals: Vec<f64> = (0..=m).map(|i| gs.profile.values()[i] * w.values()[i]).collect();
    quad::simpson(&vals, h)
}

/// Direct path: solve for `W` with source `|y|² U` and derive `𝔪`.
pub fn solve_correction(gs: &GroundState) -> Result<CorrectionProfile> {
    let source = radial_source(gs);
    let profile = solve_linearized_radial(gs, &source)?;
    let m_frak = compute_m_frak(gs, &profile);
    let w_zero = w_zero_locate(&profile).ok();
    Ok(CorrectionProfile { params: gs.params, profile, m_frak, w_zero })
}

/// One-dimensional construction `W = c U'` with
/// `c'(r) = (1/(2U'(r)²)) ∫_r^∞ s² (U²)'(s) ds`, integrated from the
/// origin after removing the `-α/r` singularity of `c`; the additive constant
/// is fixed by evenness of `W`. Uses the closed-form soliton throughout, so
/// it shares nothing with the finite-difference path.
pub fn factorization_oracle_1d(gs: &GroundState) -> Result<CorrectionProfile> {
    if gs.dim() != 1 {
        return Err(Error::InvalidInput("factorization oracle is one-dimensional".into()));
    }
    let p = gs.p();
    let u = |r: f64| soliton_1d(p, r).0;
    let du = |r: f64| soliton_1d(p, r).1;
    let kappa = (p - 1.0) / 2.0;
    let beta = 2.0 / (p - 1.0);
    // U'(r)/r, regular at the origin
    let du_over_r = |r: f64| {
        let t = if r < 1e-8 { kappa } else { (kappa * r).tanh() / r };
        -beta * kappa * t * u(r)
    };
    let integrand = |t: f64| 2.0 * t * t * u(t) * du(t);

    let nodes = gs.profile.nodes().to_vec();
    let n = nodes.len();
    let big_r = nodes[n - 1];

    // A(r) = ∫_r^∞ s² (U²)' ds accumulated from the far end
    let far: f64 = (0..40).map(|j| quad::gauss_legendre8(integrand, big_r + j as f64, big_r + j as f64 + 1.0)).sum();
    let mut a_nodes = vec![0.0; n];
    a_nodes[n - 1] = far;
    for i in (0..n - 1).rev() {
        a_nodes[i] = a_nodes[i + 1] + quad::gauss_legendre8(integrand, nodes[i], nodes[i + 1]);
    }
    let a0 = a_nodes[0];
    let upp0 = soliton_1d_second_derivative(p, 0.0);
    let alpha = a0 / (2.0 * upp0 * upp0);

    // regular part of c'
    let g = |s: f64, i: usize| {
        let a_s = a_nodes[i + 1] + quad::gauss_legendre8(integrand, s, nodes[i + 1]);
        let d = du(s);
        a_s / (2.0 * d * d) - alpha / (s * s)
    };
    let mut big_g = vec![0.0; n];
    for i in 0..n - 1 {
        big_g[i + 1] = big_g[i] + quad::gauss_legendre8(|s| g(s, i), nodes[i], nodes[i + 1]);
    }

    let mut values = Vec::with_capacity(n);
    let mut dvalues = Vec::with_capacity(n);
    for (i, &r) in nodes.iter().enumerate() {
        if i == 0 {
            values.push(-alpha * upp0);
            dvalues.push(0.0);
            continue;
        }
        let c = -alpha / r + big_g[i];
        values.push(-alpha * du_over_r(r) + big_g[i] * du(r));
        dvalues.push(a_nodes[i] / (2.0 * du(r)) + c * soliton_1d_second_derivative(p, r));
    }
    let profile = RadialProfile::new(nodes, values, dvalues, -1.0, 3.0)?;
    let m_frak = compute_m_frak(gs, &profile);
    let w_zero = w_zero_locate(&profile).ok();
    Ok(CorrectionProfile { params: gs.params, profile, m_frak, w_zero })
}

/// `c'(r)` of the factorization, for inspection of its sign and growth.
pub fn factorization_c_prime(p: f64, r: f64) -> f64 {
    let integrand = |t: f64| 2.0 * t * t * soliton_1d(p, t).0 * soliton_1d(p, t).1;
    let upper = r + 60.0;
    let steps = ((upper - r) / 0.25).ceil() as usize;
    let dx = (upper - r) / steps as f64;
    let a: f64 = (0..steps)
        .map(|j| quad::gauss_legendre8(integrand, r + j as f64 * dx, r + (j + 1) as f64 * dx))
        .sum();
    let d = soliton_1d(p, r).1;
    a / (2.0 * d * d)
}

/// The unique sign change of `W`, refined by bisection on the interpolant.
pub fn w_zero_locate(w: &RadialProfile) -> Result<f64> {
    let vals = w.values();
    let mut changes = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (i, &v) in vals.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        if let Some((j, prev)) = last {
            if prev.signum() != v.signum() {
                changes.push((j, i));
            }
        }
        last = Some((i, v));
    }
    if changes.len() != 1 {
        return Err(Error::ZeroCountMismatch { found: changes.len() });
    }
    let (j, i) = changes[0];
    let nodes = w.nodes();
    let (mut lo, mut hi) = (nodes[j], nodes[i]);
    let f_lo = w.eval(lo);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if w.eval(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::solve_ground_state;
    use crate::CATALAN;
    use approx::assert_relative_eq;

    fn gs(dim: usize, p: f64) -> GroundState {
        solve_ground_state(ProblemParams::new(dim, p).unwrap(), 1e-8).unwrap()
    }

    /// Source built from `(U, U')` pointwise, with its derivative.
    fn rhs_from(gs: &GroundState, f: impl Fn(f64, f64) -> (f64, f64)) -> RadialProfile {
        let prof = &gs.profile;
        let (vals, dvals) = prof.values().iter().zip(prof.dvalues()).map(|(&u, &du)| f(u, du)).unzip();
        RadialProfile::new(prof.nodes().to_vec(), vals, dvals, -1.0, 0.0).unwrap()
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = gs(1, 5.0);
        let zero = rhs_from(&g, |_, _| (0.0, 0.0));
        let w = solve_linearized_radial(&g, &zero).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn recovers_ground_state_and_scaling_generator() {
        for (dim, p) in [(1usize, 5.0), (1, 3.0), (2, 3.0)] {
            let g = gs(dim, p);
            // L[U] = (1-p) U^p
            let rhs = rhs_from(&g, |u, du| ((1.0 - p) * u.powf(p), (1.0 - p) * p * u.powf(p - 1.0) * du));
            let w = solve_linearized_radial(&g, &rhs).unwrap();
            for (a, b) in w.values().iter().zip(g.profile.values()).take(2001) {
                assert!((a - b).abs() < 1e-8, "N={dim} p={p}: {a} vs {b}");
            }
            // L[2U/(p-1) + rU'] = -2U
            let rhs = rhs_from(&g, |u, du| (-2.0 * u, -2.0 * du));
            let w = solve_linearized_radial(&g, &rhs).unwrap();
            for (i, &r) in g.profile.nodes().iter().enumerate().take(2001) {
                let expect = 2.0 * g.profile.values()[i] / (p - 1.0) + r * g.profile.dvalues()[i];
                assert!((w.values()[i] - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_mismatched_source_grid() {
        let g = gs(1, 5.0);
        let nodes = RadialProfile::uniform_nodes(10.0, 0.01);
        let rhs = RadialProfile::from_fn(nodes, |_| 0.0, |_| 0.0, -1.0, 0.0).unwrap();
        assert!(matches!(solve_linearized_radial(&g, &rhs), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn quintic_line_constants() {
        let g = gs(1, 5.0);
        let c = solve_correction(&g).unwrap();
        let w0_exact = -3f64.powf(0.25) * CATALAN / 4.0;
        assert!((c.w(0.0) - w0_exact).abs() < 1e-5, "W(0) = {}", c.w(0.0));
        assert!((truncated_inner(&g, &c.profile, 2.0) - 0.253_688).abs() < 1e-3);
        assert!(c.m_frak > 0.0);
        let r0 = c.w_zero.unwrap();
        assert!(r0 > 0.0 && r0 < 1.0, "zero at {r0}");
        assert!(linearized_residual(&g, &c.profile, &radial_source(&g)) < 1e-8);
    }

    #[test]
    fn factorization_agrees_with_direct_solve() {
        let g = gs(1, 5.0);
        let direct = solve_correction(&g).unwrap();
        let oracle = factorization_oracle_1d(&g).unwrap();
        let worst = g
            .profile
            .nodes()
            .iter()
            .take_while(|&&r| r <= 10.0)
            .map(|&r| (direct.w(r) - oracle.w(r)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "max difference {worst:e}");
        assert_relative_eq!(direct.m_frak, oracle.m_frak, max_relative = 1e-6);
        assert!((oracle.w(0.0) + 3f64.powf(0.25) * CATALAN / 4.0).abs() < 1e-10);
    }

    #[test]
    fn factorization_coefficient_sign_and_growth() {
        for &r in &[0.05, 0.5, 1.0, 3.0, 8.0] {
            assert!(factorization_c_prime(5.0, r) < 0.0);
        }
        let ratio = factorization_c_prime(5.0, 25.0) / (-25.0 * 25.0 / 2.0);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
        let closer = factorization_c_prime(5.0, 50.0) / (-50.0 * 50.0 / 2.0);
        assert!((closer - 1.0).abs() < (ratio - 1.0).abs());
    }

    #[test]
    fn oracle_requires_one_dimension() {
        assert!(factorization_oracle_1d(&gs(2, 3.0)).is_err());
    }

    #[test]
    fn shifted_profile_has_no_single_zero() {
        let g = gs(1, 5.0);
        let w = solve_correction(&g).unwrap().profile;
        let shifted = RadialProfile::new(
            w.nodes().to_vec(),
            w.values().iter().map(|v| v + 1000.0).collect(),
            w.dvalues().to_vec(),
            -1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(w_zero_locate(&shifted), Err(Error::ZeroCountMismatch { found: 0 }));
    }

    #[test]
    fn higher_dimensional_corrections_are_resolved() {
        for dim in [2usize, 3] {
            let p = 1.0 + 4.0 / dim as f64;
            let g = gs(dim, p);
            let c = solve_correction(&g).unwrap();
            assert!(c.m_frak.is_finite());
            let res = linearized_residual(&g, &c.profile, &radial_source(&g));
            assert!(res < 1e-8, "N={dim}: residual {res:e}");
        }
    }
}
