use std::time::Duration;

use thiserror::Error;

use crate::model::Rational;

/// Problems with an instance document or with generator parameters.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate machine id `{0}`")]
    DuplicateMachine(String),
    #[error("duplicate job id `{0}`")]
    DuplicateJob(String),
    #[error("job `{job}` references unknown machine `{machine}`")]
    DanglingMachine { job: String, machine: String },
    #[error("job `{0}` has non-positive weight {1}")]
    NonPositiveWeight(String, i64),
    #[error("job `{0}` has an empty eligible set")]
    EmptyEligible(String),
    #[error("job `{job}` lists machine `{machine}` more than once")]
    DuplicateEligible { job: String, machine: String },
    #[error("machine `{0}` has negative dedicated load {1}")]
    NegativeLoad(String, i64),
    #[error("total load {0} exceeds the supported maximum 2^40")]
    TooLarge(i64),
    #[error("invalid fraction `{0}`, expected p/q")]
    BadFraction(String),
    #[error("beta {0} is outside [4/7, 1)")]
    BetaOutOfRange(Rational),
    #[error("instance does not satisfy the {mode} assumptions: {details}")]
    Invalid { mode: String, details: String },
    #[error("bad generator parameters: {0}")]
    Generator(String),
}

/// Failures of the solver pipeline. Declarations are not errors.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("stale push move: the state changed after the move was found")]
    StaleMove,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle budget exceeded: {jobs} assignable jobs (limit {limit})")]
    BudgetExceeded { jobs: usize, limit: usize },
    #[error("oracle wall-clock cap of {0:?} exceeded")]
    Timeout(Duration),
    #[error("malformed certificate payload: {0}")]
    MalformedPayload(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
