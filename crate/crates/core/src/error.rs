use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("tail not resolved: {0}")]
    TailNotResolved(String),
    #[error("singular operator (pivot ratio {pivot_ratio:.3e})")]
    SingularOperator { pivot_ratio: f64 },
    #[error("expected exactly one sign change, found {found}")]
    ZeroCountMismatch { found: usize },
    #[error("mass-critical problem is solvable only for rho = 2*sigma0 = {two_sigma0}, got {rho}")]
    MassCriticalInfeasible { rho: f64, two_sigma0: f64 },
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("solution lost positivity (min value {min_value:.3e}), left the concentrating branch")]
    NonPositive { min_value: f64 },
    #[error("NoSolutionInRegime: {0}")]
    NoSolutionInRegime(String),
    #[error("bracket failed: {0}")]
    BracketFailed(String),
    #[error("at epsilon = {epsilon}: {source}")]
    AtEpsilon {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("wrong side of the critical mass: {0}")]
    WrongSide(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("unknown theorem id `{0}`")]
    UnknownTheorem(String),
    #[error("density must be positive (min {min_value:.3e})")]
    NonPositiveDensity { min_value: f64 },
}

impl Error {
    pub(crate) fn at_epsilon(self, epsilon: f64) -> Self {
        Error::AtEpsilon {
            epsilon,
            source: Box::new(self),
        }
    }

    /// Innermost error, with any `AtEpsilon` context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtEpsilon { source, .. } => source.root(),
            other => other,
        }
    }
}
