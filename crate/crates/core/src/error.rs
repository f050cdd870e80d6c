use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("type support must be positive, got lower bound {lo}")]
    NonPositiveSupport { lo: f64 },

    #[error("type support [{lo}, {hi}] is empty")]
    EmptySupport { lo: f64, hi: f64 },

    #[error("density vanishes at theta = {theta}")]
    ZeroDensity { theta: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid distribution table: {0}")]
    InvalidTable(String),

    #[error("participation level must be nonnegative, got {x}")]
    NegativeParticipation { x: f64 },

    #[error(
        "reward slope {alpha} is not below the marginal cost {p}; the agent's utility is unbounded"
    )]
    UnboundedResponse { alpha: f64, p: f64 },

    #[error("satisfaction function is linear (z1 = 0); best response is not interior")]
    DegenerateSatisfaction,

    #[error("grid is empty")]
    EmptyGrid,

    #[error("type grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("type grid is not uniform: {0}")]
    NonUniformGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("alpha decreases between nodes {index} and {next}", next = index + 1)]
    NonMonotoneAlpha { index: usize },

    #[error("alpha = {alpha} at node {index} reaches the cost limit {limit}")]
    AlphaExceedsCost {
        index: usize,
        alpha: f64,
        limit: f64,
    },
}
