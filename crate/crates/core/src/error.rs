use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("unsplittable variable {index}: needs at least 2 samples, got {len}")]
    UnsplittableVariable { index: usize, len: usize },
    #[error("need at least two variables, got {0}")]
    TooFewVariables(usize),
    #[error("estimate vectors have mismatched lengths ({a}, {b}, {c})")]
    LengthMismatch { a: usize, b: usize, c: usize },
    #[error("empty allowed index set")]
    EmptyAllowedSet,
    #[error("index {index} out of range for {len} values")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid candidate count {k} for {n} variables")]
    InvalidCandidateCount { k: usize, n: usize },
    #[error("negative variance {value} at index {index}")]
    NegativeVariance { index: usize, value: f64 },
    #[error("estimates and true maxima differ in length ({estimates} vs {truths})")]
    BiasLengthMismatch { estimates: usize, truths: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("invalid rate interval [{low}, {high}]")]
    InvalidRates { low: f64, high: f64 },
    #[error("need at least 2 ads, got {0}")]
    TooFewAds(usize),
    #[error("{visitors} visitors cannot give {ads} ads two samples each")]
    TooFewVisitors { visitors: usize, ads: usize },
    #[error("candidate fraction {0} outside (0, 1]")]
    InvalidCandidateFraction(f64),
    #[error("trial count must be positive")]
    NoTrials,
    #[error("value {value} is not valid for sweep axis {axis}")]
    InvalidSweepValue { axis: &'static str, value: f64 },
    #[error("{expected} forced rates required, got {got}")]
    RateCountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("state {state} out of range ({num_states} states)")]
    StateOutOfRange { state: usize, num_states: usize },
    #[error("action {action} out of range ({num_actions} actions)")]
    ActionOutOfRange { action: usize, num_actions: usize },
    #[error("invalid candidate count {k} for {num_actions} actions")]
    InvalidCandidateCount { k: usize, num_actions: usize },
    #[error("discount factor {0} outside [0, 1)")]
    InvalidGamma(f64),
    #[error("grid side must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("epsilon {0} outside [0, 1]")]
    InvalidEpsilon(f64),
    #[error("probe interval must be positive")]
    ZeroProbeInterval,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("malformed value for `{key}`: {value:?} ({reason})")]
    MalformedValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("config file {path}: line {line}: {reason}")]
    ConfigSyntax {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("nothing to write")]
    NothingToWrite,
    #[error("trial {index} panicked: {message}")]
    TrialPanicked { index: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error(transparent)]
    Rl(#[from] RlError),
}
