//! Subcommand bodies. Each returns the files it wants written; nothing here
//! touches the filesystem.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use normsol_core::asymptotics::{self, Tolerances};
use normsol_core::boundary_layer::{self, BoundaryCondition, BoundaryLayer};
use normsol_core::corrections::{self, CorrectionProfile};
use normsol_core::groundstate::{self, GridConfig};
use normsol_core::mfg;
use normsol_core::nls_bvp::{
    self, BoundaryKind, BranchPoint, DomainSpec, InitialGuess, NormalizedSolution, Potential, SolverConfig,
};
use normsol_core::{Execution, ProblemParams};
use serde::Serialize;

use crate::config::{Bc, CorrectionMethod, Domain, Exec, Guess, RunConfig};
use crate::output::{csv, json, Artifact};
use crate::CliError;

type Outcome = Result<Vec<Artifact>, CliError>;

fn pair(stem: &str, cfg: &RunConfig, table: String, result: &impl Serialize) -> Vec<Artifact> {
    vec![
        Artifact { name: format!("{stem}.csv"), contents: table },
        Artifact { name: format!("{stem}.json"), contents: json(cfg, result) },
    ]
}

fn execution(cfg: &RunConfig) -> Execution {
    match cfg.exec {
        Exec::Sequential => Execution::Sequential,
        Exec::Parallel => Execution::Parallel,
    }
}

fn ground_state(cfg: &RunConfig) -> Result<groundstate::GroundState, CliError> {
    let params = ProblemParams::new(cfg.n, cfg.require_p()?)?;
    let grid = GridConfig { radius: cfg.radius, step: cfg.step };
    Ok(groundstate::solve_ground_state_on(params, grid, cfg.accuracy)?)
}

#[derive(Serialize)]
struct GroundStateResult {
    sigma0: f64,
    frak_c: f64,
    u0: f64,
    ode_residual: f64,
    method: groundstate::Method,
}

pub fn cmd_ground_state(cfg: &RunConfig) -> Outcome {
    let gs = ground_state(cfg)?;
    let prof = &gs.profile;
    let table = csv(&["r", "U", "dU"], &[prof.nodes(), prof.values(), prof.dvalues()]);
    let result = GroundStateResult {
        sigma0: gs.sigma0,
        frak_c: gs.frak_c,
        u0: prof.values()[0],
        ode_residual: gs.ode_residual(),
        method: gs.method,
    };
    Ok(pair("ground_state", cfg, table, &result))
}

#[derive(Serialize)]
struct CorrectionResult {
    m_frak: f64,
    w_origin: f64,
    w_zero: Option<f64>,
    /// `∫₀² U W r^{N-1} dr`.
    inner_to_two: f64,
}

pub fn cmd_correction(cfg: &RunConfig) -> Outcome {
    let gs = ground_state(cfg)?;
    let corr: CorrectionProfile = match cfg.method {
        CorrectionMethod::Fd => corrections::solve_correction(&gs)?,
        CorrectionMethod::Oracle => corrections::factorization_oracle_1d(&gs)?,
    };
    let w = &corr.profile;
    let table = csv(&["r", "W", "dW"], &[w.nodes(), w.values(), w.dvalues()]);
    let result = CorrectionResult {
        m_frak: corr.m_frak,
        w_origin: corr.w(0.0),
        w_zero: corr.w_zero,
        inner_to_two: corrections::truncated_inner(&gs, w, 2.0),
    };
    Ok(pair("correction", cfg, table, &result))
}

#[derive(Serialize)]
struct BoundaryLayerResult {
    center_value: f64,
    theta_quadrature: f64,
    theta_closed_form: f64,
    theta_asymptotic: f64,
    theta_leading_constant: f64,
    viscosity_rate: f64,
}

pub fn cmd_boundary_layer(cfg: &RunConfig) -> Outcome {
    let eps = cfg.require_epsilon()?;
    let bc = match cfg.bc {
        Some(Bc::Neumann) => BoundaryCondition::Neumann,
        _ => BoundaryCondition::Dirichlet,
    };
    if cfg.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let layer = BoundaryLayer::new(eps, bc)?;
    let (a, b) = (-1.0, 1.0);
    let h = (b - a) / (cfg.points - 1) as f64;
    let x: Vec<f64> = (0..cfg.points).map(|i| a + h * i as f64).collect();
    let phi = x.iter().map(|&t| layer.phi(t)).collect::<Result<Vec<_>, _>>()?;
    let dphi = x
        .iter()
        .map(|&t| boundary_layer::phi_explicit_derivative(eps, bc, t))
        .collect::<Result<Vec<_>, _>>()?;
    let table = csv(&["x", "phi", "dphi"], &[&x, &phi, &dphi]);
    let result = BoundaryLayerResult {
        center_value: layer.center_value,
        theta_quadrature: boundary_layer::theta_quadrature(eps, bc)?,
        theta_closed_form: layer.theta,
        theta_asymptotic: boundary_layer::theta_asymptotic(eps, bc),
        theta_leading_constant: boundary_layer::theta_leading_constant(),
        viscosity_rate: layer.viscosity_rate(),
    };
    Ok(pair("boundary_layer", cfg, table, &result))
}

fn domain_spec(cfg: &RunConfig) -> Result<DomainSpec, CliError> {
    let spec = match cfg.domain {
        Domain::Interval => {
            if !cfg.potential.is_empty() {
                return Err(CliError::Usage("--potential applies to the real line only".into()));
            }
            let bc = match cfg.bc {
                Some(Bc::Neumann) => BoundaryKind::Neumann,
                _ => BoundaryKind::Dirichlet,
            };
            DomainSpec::interval(cfg.a, cfg.b, bc)?
        }
        Domain::Realline => {
            let potential =
                if cfg.potential.is_empty() { Potential::zero() } else { Potential::new(cfg.potential.clone())? };
            DomainSpec::real_line(potential)?
        }
    };
    Ok(spec)
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig { tol: cfg.tol, nodes: cfg.nodes, extrapolate_mass: cfg.extrapolate, ..SolverConfig::default() }
}

fn initial_guess(cfg: &RunConfig, spec: &DomainSpec) -> InitialGuess {
    match (cfg.guess, cfg.center) {
        (Guess::Endpoint, _) => InitialGuess::AnsatzEndpoint,
        (Guess::Interior, Some(c)) => InitialGuess::AnsatzInterior(c),
        (Guess::Interior, None) => nls_bvp::default_guess(spec),
    }
}

/// Direct solve at the prescribed mass or the prescribed `ε`.
fn direct_solve(cfg: &RunConfig) -> Result<(DomainSpec, NormalizedSolution), CliError> {
    let spec = domain_spec(cfg)?;
    let params = ProblemParams::new(cfg.n, cfg.require_p()?)?;
    let init = initial_guess(cfg, &spec);
    let solver = solver_config(cfg);
    let sol = match (cfg.rho, cfg.epsilon) {
        (Some(rho), None) => nls_bvp::solve_normalized_with(&spec, &params, rho, &init, &solver)?,
        (None, Some(eps)) => nls_bvp::solve_at(&spec, &params, eps, &init, &solver)?,
        _ => return Err(CliError::Usage("give exactly one of --rho and --epsilon".into())),
    };
    Ok((spec, sol))
}

#[derive(Serialize)]
struct SolveResult {
    lambda: f64,
    epsilon: f64,
    mass: f64,
    residual_inf: f64,
    concentration_point: f64,
    nodes: usize,
}

pub fn cmd_solve(cfg: &RunConfig) -> Outcome {
    let (_, sol) = direct_solve(cfg)?;
    let table = csv(&["x", "v", "u"], &[&sol.x, &sol.v_values, &sol.u_values]);
    let result = SolveResult {
        lambda: sol.lambda,
        epsilon: sol.epsilon,
        mass: sol.mass,
        residual_inf: sol.residual_inf,
        concentration_point: sol.concentration_point,
        nodes: sol.x.len(),
    };
    Ok(pair("solve", cfg, table, &result))
}

#[derive(Serialize)]
struct TraceResult {
    two_sigma0: f64,
    points: Vec<BranchPoint>,
}

pub fn cmd_trace(cfg: &RunConfig) -> Outcome {
    if cfg.epsilons.is_empty() {
        return Err(CliError::Usage("missing required --epsilons".into()));
    }
    let spec = domain_spec(cfg)?;
    let p = cfg.require_p()?;
    let params = ProblemParams::new(cfg.n, p)?;
    let init = initial_guess(cfg, &spec);
    let solver = solver_config(cfg);
    let points = if cfg.continuation {
        nls_bvp::trace_branch(&spec, &params, &cfg.epsilons, &init, &solver)?
    } else {
        nls_bvp::sweep(&spec, &params, &cfg.epsilons, &init, &solver, execution(cfg))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?
    };
    let two_sigma0 = nls_bvp::two_sigma0_1d(p);
    let col = |f: fn(&BranchPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    let (eps, mass, res) = (col(|b| b.epsilon), col(|b| b.mass), col(|b| b.residual));
    let gap: Vec<f64> = mass.iter().map(|m| m - two_sigma0).collect();
    let table = csv(&["epsilon", "mass", "mass_minus_two_sigma0", "residual"], &[&eps, &mass, &gap, &res]);
    Ok(pair("trace", cfg, table, &TraceResult { two_sigma0, points }))
}

/// `quantity,epsilon,predicted,observed`, with `epsilon` parsed from keys of
/// the form `name@eps` (NaN otherwise) and NaN for missing sides.
fn report_table(report: &asymptotics::AsymptoticReport) -> String {
    let keys: BTreeSet<&String> = report.predicted.keys().chain(report.observed.keys()).collect();
    let mut s = String::from("quantity,epsilon,predicted,observed\n");
    for key in keys {
        let (name, eps) = match key.split_once('@') {
            Some((n, e)) => (n, e.parse().unwrap_or(f64::NAN)),
            None => (key.as_str(), f64::NAN),
        };
        let pred = report.predicted.get(key).copied().unwrap_or(f64::NAN);
        let obs = report.observed.get(key).copied().unwrap_or(f64::NAN);
        writeln!(s, "{name},{eps:.16e},{pred:.16e},{obs:.16e}").expect("writing to a String");
    }
    s
}

pub fn cmd_verify(cfg: &RunConfig) -> Outcome {
    let id = cfg.theorem.as_deref().ok_or_else(|| {
        CliError::Usage(format!("missing required --theorem (one of {})", asymptotics::THEOREM_IDS.join(", ")))
    })?;
    let report = asymptotics::verify_report(id, &Tolerances::default(), execution(cfg))?;
    Ok(pair(&format!("verify_{id}"), cfg, report_table(&report), &report))
}

#[derive(Serialize)]
struct MfgResult {
    lambda: f64,
    alpha: f64,
    q: f64,
    nu: f64,
    residual_hjb: f64,
    residual_kolmogorov: f64,
    mass_defect: f64,
}

pub fn cmd_mfg(cfg: &RunConfig) -> Outcome {
    let (spec, sol) = direct_solve(cfg)?;
    let q = cfg.q.unwrap_or((sol.p - 1.0) / 2.0);
    let t = mfg::to_mfg(&sol, &spec, q, cfg.nu)?;
    let table = csv(&["x", "u", "m"], &[&t.x, &t.u_values, &t.m_values]);
    let result = MfgResult {
        lambda: t.lambda,
        alpha: t.alpha,
        q: t.q,
        nu: t.nu,
        residual_hjb: t.residual_hjb,
        residual_kolmogorov: t.residual_kolmogorov,
        mass_defect: t.mass_defect,
    };
    Ok(pair("mfg", cfg, table, &result))
}
