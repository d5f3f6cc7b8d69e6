use std::path::PathBuf;

use thiserror::Error;

use crate::model::Pair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("input lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed dataset: {0}")]
    MalformedData(String),

    #[error("malformed edge list {path}: {reason}")]
    MalformedEdgeList { path: PathBuf, reason: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("trace replay diverged at event {index}: {reason}")]
    TraceMismatch { index: usize, reason: String },

    #[error("no open edges remain")]
    EmptyResidual,

    #[error("answer for {pair:?} would close a directed cycle")]
    InconsistentAnswer { pair: Pair },

    #[error("oracle answers did not reproduce the ground truth: {0}")]
    ImperfectOracle(String),

    #[error("oracle answer does not match the pending query: {0}")]
    AnswerMismatch(String),

    #[error("scripted oracle exhausted at query {0}")]
    ScriptExhausted(usize),

    #[error("answer references query {got} but query {expected} is pending")]
    StaleQuery { expected: u64, got: u64 },

    #[error("oracle session abandoned")]
    Abandoned,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
