use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("intervals {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("branch ({from},{to}) is not contracting: sampled |y'| = {derivative}")]
    Expansion { from: usize, to: usize, derivative: f64 },
    #[error("transition matrix is not primitive: no n <= {bound} with A^n > 0")]
    Mixing { bound: usize },
    #[error("branch ({from},{to}) image escapes its interval: {detail}")]
    Range { from: usize, to: usize, detail: String },
    #[error("point {0} lies outside the domain")]
    Domain(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("power iteration did not converge after {iterations} iterations (last change {change:e})")]
    Convergence { iterations: usize, change: f64 },
    #[error("Neumann series diverges after {terms} terms (last term norm {last_norm:e})")]
    Divergence { terms: usize, last_norm: f64 },
    #[error("no contraction to {target} within {cap} iterations at b = {b}")]
    NoContraction { b: f64, target: f64, cap: usize },
    #[error("words {0:?} and {1:?} cannot be compared")]
    WordMismatch(Vec<usize>, Vec<usize>),
    #[error("oscillation D|b| = {0} too small to place three partition points")]
    InsufficientOscillation(f64),
    #[error("test function violates |h|_a <= 2 C3 |b|^a |h|_inf ({seminorm} > {bound})")]
    Hypothesis { seminorm: f64, bound: f64 },
    #[error("need at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidArgument(_)
                | Error::Overlap(..)
                | Error::Expansion { .. }
                | Error::Mixing { .. }
                | Error::Range { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
