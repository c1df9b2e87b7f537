use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("segment length must be finite and positive, got {0}")]
    InvalidSegment(f64),
    #[error("instance has no agents")]
    EmptyInstance,
    #[error("{positions} positions but {types} preference types")]
    LengthMismatch { positions: usize, types: usize },
    #[error("agent {agent} is at {x}, outside [0, {d}]")]
    PositionOutOfRange { agent: usize, x: f64, d: f64 },
    #[error("facility {y} lies outside [0, {d}]")]
    FacilityOutOfRange { y: f64, d: f64 },
    #[error("location {loc} lies outside [0, {d}]")]
    LocationOutOfRange { loc: f64, d: f64 },
    #[error("{0:?} is not a permutation")]
    NotAPermutation(Vec<usize>),
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown preference token {0:?} (expected \"L\" or \"H\")")]
    UnknownType(String),
    #[error("{agents} {kind} agents but {slots} locations designated for them")]
    SlotCountMismatch {
        kind: &'static str,
        agents: usize,
        slots: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("exhaustive enumeration is limited to {limit} agents, instance has {n}")]
    TooManyAgents { n: usize, limit: usize },
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("invalid agent-count range {min}..={max}")]
    InvalidRange { min: usize, max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
