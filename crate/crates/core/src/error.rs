use thiserror::Error;

/// Errors raised by the dynamics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown map family `{0}`")]
    UnknownFamily(String),

    #[error("parameter {param} out of range for family {family}: {expected}")]
    ParamOutOfRange {
        family: &'static str,
        param: f64,
        expected: &'static str,
    },

    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },

    #[error("iterate {index} escaped the domain (value {value})")]
    Escaped { index: usize, value: f64 },

    #[error("derivative zero on orbit at index {index}")]
    CriticalHit { index: usize },

    #[error("branch index {index} out of range (map has {count} branches)")]
    NoSuchBranch { index: usize, count: usize },

    #[error("interval [{lo}, {hi}] does not meet the image of branch {branch}")]
    EmptyPullback { branch: usize, lo: f64, hi: f64 },

    #[error("operation requires a unimodal map")]
    NotUnimodal,

    #[error("itinerary contains a critical symbol at position {0}")]
    CriticalSymbol(usize),

    #[error("kneading sequences differ at position {position}")]
    KneadingMismatch { position: usize },

    #[error("no closed-form conjugacy between {from} and {to}")]
    NoExplicitConjugacy { from: String, to: String },

    #[error("empty cylinder at schedule position {position}")]
    EmptyCylinder { position: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("{needed} bits of precision needed, limit is {limit}; depth {achievable} is achievable")]
    PrecisionExhausted { needed: u32, limit: u32, achievable: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
