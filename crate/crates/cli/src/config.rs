//! Run configuration: flat `key = value` files merged under command-line
//! flags, then resolved into a typed [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Interval,
    Realline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Guess {
    Interior,
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionMethod {
    /// Finite differences with Richardson extrapolation.
    Fd,
    /// Quadrature of the factorized one-dimensional solution.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    Parallel,
}

/// Flags shared by every subcommand. Each long flag doubles as a config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Space dimension N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Exponent p > 1.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_enum)]
    pub domain: Option<Domain>,
    /// Left end of the interval.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Right end of the interval.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, value_enum)]
    pub bc: Option<Bc>,
    /// Polynomial potential coefficients c0,c1,... (real line only).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub potential: Option<Vec<f64>>,
    /// Prescribed mass ∫v².
    #[arg(long)]
    pub rho: Option<f64>,
    /// Fixed ε = λ^{-1/2} instead of a prescribed mass.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Comma-separated ε list for `trace`.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub guess: Option<Guess>,
    /// Initial spike location for interior guesses.
    #[arg(long, allow_negative_numbers = true)]
    pub center: Option<f64>,
    /// Newton tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fixed grid size for the direct solver.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Richardson-extrapolate masses.
    #[arg(long)]
    pub extrapolate: Option<bool>,
    /// Continuation along the ε list instead of independent solves.
    #[arg(long)]
    pub continuation: Option<bool>,
    /// Radial truncation for ground states.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Radial step for ground states.
    #[arg(long)]
    pub step: Option<f64>,
    /// Shooting accuracy for N ≥ 2 ground states.
    #[arg(long)]
    pub accuracy: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<CorrectionMethod>,
    /// Sample count for boundary-layer profiles.
    #[arg(long)]
    pub points: Option<usize>,
    /// Comparison id for `verify`.
    #[arg(long)]
    pub theorem: Option<String>,
    /// Congestion exponent q (defaults to (p-1)/2).
    #[arg(long)]
    pub q: Option<f64>,
    /// Viscosity ν.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, value_enum)]
    pub exec: Option<Exec>,
}

const KEYS: [&str; 27] = [
    "out", "n", "p", "domain", "a", "b", "bc", "potential", "rho", "epsilon", "epsilons", "guess", "center", "tol",
    "nodes", "extrapolate", "continuation", "radius", "step", "accuracy", "method", "points", "theorem", "q", "nu",
    "exec", "config",
];

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Flags {
    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("n", self.n.map(|v| v.to_string()));
        put("p", self.p.map(|v| v.to_string()));
        put("domain", self.domain.as_ref().map(enum_name));
        put("a", self.a.map(|v| v.to_string()));
        put("b", self.b.map(|v| v.to_string()));
        put("bc", self.bc.as_ref().map(enum_name));
        put("potential", self.potential.as_deref().map(join));
        put("rho", self.rho.map(|v| v.to_string()));
        put("epsilon", self.epsilon.map(|v| v.to_string()));
        put("epsilons", self.epsilons.as_deref().map(join));
        put("guess", self.guess.as_ref().map(enum_name));
        put("center", self.center.map(|v| v.to_string()));
        put("tol", self.tol.map(|v| v.to_string()));
        put("nodes", self.nodes.map(|v| v.to_string()));
        put("extrapolate", self.extrapolate.map(|v| v.to_string()));
        put("continuation", self.continuation.map(|v| v.to_string()));
        put("radius", self.radius.map(|v| v.to_string()));
        put("step", self.step.map(|v| v.to_string()));
        put("accuracy", self.accuracy.map(|v| v.to_string()));
        put("method", self.method.as_ref().map(enum_name));
        put("points", self.points.map(|v| v.to_string()));
        put("theorem", self.theorem.clone());
        put("q", self.q.map(|v| v.to_string()));
        put("nu", self.nu.map(|v| v.to_string()));
        put("exec", self.exec.as_ref().map(enum_name));
        out
    }
}

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", no + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", no + 1)));
        }
    }
    Ok(map)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Fully resolved parameters of one run. `out` is where files go and is not
/// part of the serialized record, so identical runs give identical bytes
/// regardless of destination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip)]
    pub out: PathBuf,
    pub n: usize,
    pub p: Option<f64>,
    pub domain: Domain,
    pub a: f64,
    pub b: f64,
    pub bc: Option<Bc>,
    pub potential: Vec<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilons: Vec<f64>,
    pub guess: Guess,
    pub center: Option<f64>,
    pub tol: f64,
    pub nodes: Option<usize>,
    pub extrapolate: bool,
    pub continuation: bool,
    pub radius: f64,
    pub step: f64,
    pub accuracy: f64,
    pub method: CorrectionMethod,
    pub points: usize,
    pub theorem: Option<String>,
    pub q: Option<f64>,
    pub nu: f64,
    pub exec: Exec,
}

struct Lookup(BTreeMap<String, String>);

impl Lookup {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad value for `{key}`: `{s}`"))))
            .transpose()
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|s| T::from_str(s, true).map_err(|_| CliError::Usage(format!("bad value for `{key}`: `{s}`"))))
            .transpose()
    }

    fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.0
            .get(key)
            .map(|s| {
                s.split(',')
                    .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("bad entry in `{key}`: `{t}`"))))
                    .collect()
            })
            .transpose()
    }
}

impl RunConfig {
    /// Merge the config file (if any) under `flags` and resolve defaults.
    pub fn resolve(command: &str, flags: &Flags) -> Result<Self, CliError> {
        let mut map = match &flags.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        for (k, v) in flags.entries() {
            map.insert(k.to_string(), v);
        }
        Self::from_map(command, map)
    }

    pub fn from_map(command: &str, map: BTreeMap<String, String>) -> Result<Self, CliError> {
        let l = Lookup(map);
        let domain = l.get_enum("domain")?.unwrap_or(Domain::Interval);
        let bc = l.get_enum::<Bc>("bc")?;
        let bc = match domain {
            Domain::Interval => Some(bc.unwrap_or(Bc::Dirichlet)),
            Domain::Realline if bc.is_some() => {
                return Err(CliError::Usage("the real line takes no --bc (decay is implied)".into()))
            }
            Domain::Realline => None,
        };
        let cfg = Self {
            command: command.to_string(),
            out: l.get("out")?.unwrap_or_else(|| PathBuf::from(".")),
            n: l.get("n")?.unwrap_or(1),
            p: l.get("p")?,
            domain,
            a: l.get("a")?.unwrap_or(-1.0),
            b: l.get("b")?.unwrap_or(1.0),
            bc,
            potential: l.get_list("potential")?.unwrap_or_default(),
            rho: l.get("rho")?,
            epsilon: l.get("epsilon")?,
            epsilons: l.get_list("epsilons")?.unwrap_or_default(),
            guess: l.get_enum("guess")?.unwrap_or(Guess::Interior),
            center: l.get("center")?,
            tol: l.get("tol")?.unwrap_or(1e-11),
            nodes: l.get("nodes")?,
            extrapolate: l.get("extrapolate")?.unwrap_or(true),
            continuation: l.get("continuation")?.unwrap_or(false),
            radius: l.get("radius")?.unwrap_or(normsol_core::groundstate::DEFAULT_RADIUS),
            step: l.get("step")?.unwrap_or(normsol_core::groundstate::DEFAULT_STEP),
            accuracy: l.get("accuracy")?.unwrap_or(1e-8),
            method: l.get_enum("method")?.unwrap_or(CorrectionMethod::Fd),
            points: l.get("points")?.unwrap_or(401),
            theorem: l.get("theorem")?,
            q: l.get("q")?,
            nu: l.get("nu")?.unwrap_or(normsol_core::mfg::DEFAULT_NU),
            exec: l.get_enum("exec")?.unwrap_or(if cfg!(feature = "parallel") { Exec::Parallel } else { Exec::Sequential }),
        };
        Ok(cfg)
    }

    pub fn require_p(&self) -> Result<f64, CliError> {
        self.p.ok_or_else(|| CliError::Usage("missing required --p".into()))
    }

    pub fn require_epsilon(&self) -> Result<f64, CliError> {
        self.epsilon.ok_or_else(|| CliError::Usage("missing required --epsilon".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_yield_to_flags() {
        let file = parse_config_text("# run\np = 3\nrho = 8 # mass\ndomain = realline\n").unwrap();
        let mut map = file;
        map.insert("p".into(), "5".into());
        let cfg = RunConfig::from_map("solve", map).unwrap();
        assert_eq!(cfg.p, Some(5.0));
        assert_eq!(cfg.rho, Some(8.0));
        assert_eq!(cfg.domain, Domain::Realline);
        assert_eq!(cfg.bc, None);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("p = 3\np = 5").is_err());
        assert!(parse_config_text("just words").is_err());
    }

    #[test]
    fn flag_entries_round_trip() {
        let flags = Flags {
            p: Some(0.1 + 0.2),
            potential: Some(vec![0.0, -1.5e-3, 1.0]),
            bc: Some(Bc::Neumann),
            ..Default::default()
        };
        let map: BTreeMap<String, String> = flags.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let cfg = RunConfig::from_map("solve", map).unwrap();
        assert_eq!(cfg.p, Some(0.1 + 0.2));
        assert_eq!(cfg.potential, vec![0.0, -1.5e-3, 1.0]);
        assert_eq!(cfg.bc, Some(Bc::Neumann));
    }
}
