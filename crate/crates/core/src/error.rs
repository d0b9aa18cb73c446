use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidSpec(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("internal root-finding failure: {0}")]
    InternalRoot(String),

    #[error("unsupported chain length {0} for closed form (expected 2 or 3)")]
    UnsupportedChainLength(usize),

    #[error("pole search did not converge after {evaluations} evaluations (best sigma_min {best:e})")]
    MaxIterations { evaluations: usize, best: f64 },

    #[error("pole search stalled at a non-singular point (sigma_min/norm {ratio:e})")]
    Stalled { ratio: f64 },

    #[error("conditioning failure: {0}")]
    ConditioningFailure(String),

    #[error("incomplete pole set: found {found} of {expected}")]
    IncompletePoleSet { found: usize, expected: usize },

    #[error("spectrum size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("theta/pi = {theta_over_pi} is not within 0.05 of an integer")]
    ThetaOutOfRange { theta_over_pi: f64 },

    #[error("spectrum has no index tuples (method {0})")]
    MissingTuples(String),

    #[error("scaling fit needs at least 5 sizes, got {0}")]
    TooFewPoints(usize),
}
