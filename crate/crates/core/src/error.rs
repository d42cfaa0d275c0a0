use thiserror::Error;

use crate::scenario::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scenario: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("degenerate best-response coefficients: {0}")]
    Degenerate(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("no converged point in sweep")]
    NoConvergedPoint,

    #[error("unexpected equilibrium structure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
