use thiserror::Error;

use crate::expr::sexpr::ParseError;
use crate::expr::EvalError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot parse `{src}`: {source}")]
    Parse { src: String, source: ParseError },
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("form of degree {degree} does not exist on a rank {rank} bundle")]
    Degree { degree: usize, rank: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("not fibered: {0}")]
    NotFibered(String),
    #[error("fiber map is not admissible: {0}")]
    NotAdmissible(String),
    #[error("section is not projectable: {0}")]
    NotProjectable(String),
    #[error("element violates the prolongation constraint (residual {residual:e})")]
    ConstraintViolation { residual: f64 },
    #[error("level {level} out of range for a system with {levels} levels")]
    Level { level: usize, levels: usize },
    #[error("family is not compatible with the bonding maps (residual {residual:e})")]
    IncompatibleFamily { residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("trajectory left the domain at t = {t}: {source}")]
    DomainExit { t: f64, last_state: Vec<f64>, source: EvalError },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, last_state: Vec<f64> },
}

impl Error {
    /// True for errors caused by evaluating outside an expression's domain.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Eval(EvalError::Domain(_)) | Error::DomainExit { .. } | Error::NonFinite { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
