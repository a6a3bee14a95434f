use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("cannot condition on an event of probability zero")]
    ZeroEvidence,
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("every member gives the conditioning event probability zero")]
    AllEvidenceNull,
    #[error("plausibility of the conditioning event is zero")]
    NullPlausibility,
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("malformed fixture: {0}")]
    MalformedFixture(String),
    #[error("classical selector `{0}` returned a measure outside its input")]
    SelectorViolation(String),
    #[error("malformed linear program: {0}")]
    MalformedProblem(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
