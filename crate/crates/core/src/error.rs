use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid norm specification: {0}")]
    InvalidNorm(String),

    #[error("dimension mismatch: norm expects {expected}, vector has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite component in input vector")]
    NonFinite,

    #[error("profile is not convex: {0}")]
    NonConvex(String),

    #[error("limit did not converge after {steps} doublings (last change {last_change:e})")]
    NonConvergence { steps: usize, last_change: f64 },

    #[error("limit diverges: the supplied slope {k} is not the asymptotic slope")]
    Divergence { k: f64 },

    #[error("quadrature did not reach tolerance: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("integrand is discontinuous at atom t = {0}")]
    DiscontinuousAtAtom(f64),

    #[error("tail bound violated: |f(t)| t^2 = {observed:e} exceeds declared constant {declared:e} at t = {t}")]
    TailBound { t: f64, observed: f64, declared: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("size guard exceeded: {what} ({size} > {limit})")]
    TooLarge { what: &'static str, size: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
