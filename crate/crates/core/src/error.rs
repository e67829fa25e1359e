use thiserror::Error;

use crate::domain::{Action, SpiderState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{attribute} (index {index}) = {value} is outside 0..={max}")]
    AttributeOutOfRange {
        attribute: &'static str,
        index: usize,
        value: u8,
        max: u8,
    },
    #[error("attribute index {0} does not exist")]
    UnknownAttribute(usize),
    #[error("state index {0} is outside 0..486")]
    StateIndexOutOfRange(usize),
    #[error("action {action} is not valid in state {state}")]
    InvalidAction { state: SpiderState, action: Action },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("target stress {0} is outside 1..=9")]
    InvalidTarget(i64),
    #[error("stress {x} is outside [{min}, {max}]")]
    StressOutOfBounds { x: f64, min: f64, max: f64 },
}

#[derive(Debug, Error)]
pub enum SubjectError {
    #[error("population size must be at least 1")]
    EmptyPopulation,
    #[error("subject {id}: {reason}")]
    InvalidSubject { id: u32, reason: String },
    #[error("subject ids must be 0..n-1 in order; found {found} at position {position}")]
    NonSequentialIds { position: usize, found: u32 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown method {0:?}; expected one of rl_zero, rl_random, ga, greedy, random")]
    UnknownMethod(String),
    #[error("run configured for subject {expected} but got subject {actual}")]
    SubjectMismatch { expected: u32, actual: u32 },
    #[error("unknown initial state {0:?}; expected min, avg or max")]
    UnknownInitialKind(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("differences have zero variance (mean difference {mean_difference})")]
    ZeroVariance { mean_difference: f64 },
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("results contain no runs")]
    EmptyResults,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("could not build worker pool: {0}")]
    WorkerPool(String),
}
