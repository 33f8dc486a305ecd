use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by a jet with zero constant term ({0})")]
    DivisionByZero(String),
    #[error("singular constant-term matrix in jet solve")]
    DegenerateSystem,
    #[error("frame integration failed near x = {x}: {reason}")]
    IntegrationFailure { x: f64, reason: String },
    #[error("degenerate lift: {0}")]
    DegenerateLift(String),
    #[error("degenerate intersection: {0}")]
    DegenerateIntersection(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid curve spec: {0}")]
    InvalidSpec(String),
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("operator algebra inconsistency: {0}")]
    AlgebraInconsistency(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
