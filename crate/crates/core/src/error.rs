use thiserror::Error;

use crate::solver::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("oracle does not expose exact values")]
    NoTruthAccess,

    #[error("min-norm QP did not converge in {iterations} iterations (certificate gap {gap:e})")]
    QpNonConvergence { iterations: usize, gap: f64 },

    #[error("search direction is zero")]
    ZeroDirection,

    #[error("oracle returned a non-finite value")]
    NonFinite,

    #[error("no step of length at least {min_step:e} between consecutive iterates")]
    NoQualifyingSteps { min_step: f64 },

    #[error("parameters violate the algorithm requirements: {}", fmt_violations(.0))]
    RequirementsViolated(Vec<Violation>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
