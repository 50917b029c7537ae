//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced while parsing a case file. Every variant carries the
/// 1-based line number where the problem was detected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: usize, detail: String },
    #[error("line {line}: duplicate bus id {id}")]
    DuplicateBus { line: usize, id: usize },
    #[error("line {line}: duplicate branch id {id}")]
    DuplicateBranch { line: usize, id: usize },
    #[error("line {line}: branch {branch} references nonexistent bus {bus}")]
    DanglingEndpoint { line: usize, branch: usize, bus: usize },
    #[error("line {line}: branch {branch} connects bus {bus} to itself")]
    SelfLoop { line: usize, branch: usize, bus: usize },
    #[error("line {line}: {detail}")]
    InvalidValue { line: usize, detail: String },
    #[error("missing reference bus (no REF line)")]
    MissingReference,
    #[error("line {line}: reference bus {id} does not exist")]
    UnknownReference { line: usize, id: usize },
    #[error("case defines no buses")]
    EmptyCase,
}

/// Errors produced by the flow solver, the cascade engine and the
/// optimization layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("branch {0} not found")]
    BranchNotFound(usize),
    #[error("branch {0} is not in service")]
    BranchOutOfService(usize),
    #[error("disturbance {value} outside bounds [{lower}, {upper}]")]
    DisturbanceOutOfBounds { value: f64, lower: f64, upper: f64 },
    #[error("singular susceptance matrix in island {island}")]
    SingularIsland { island: usize },
    #[error("power flow failed at cascade step {step}: {source}")]
    CascadeFlow {
        step: usize,
        #[source]
        source: Box<CoreError>,
    },
    #[error("HVDC link on branch {branch}: R_cr + R_L - R_ci must be nonzero")]
    HvdcDegenerate { branch: usize },
    #[error("HVDC link on branch {branch}: ignition delay angle {alpha} outside [pi/30, pi/2]")]
    HvdcAlphaOutOfRange { branch: usize, alpha: f64 },
    #[error("cost evaluation failed for gradient component {component}: {source}")]
    GradientProbe {
        component: usize,
        #[source]
        source: Box<CoreError>,
    },
    #[error("non-finite arithmetic in {0}")]
    NonFinite(&'static str),
    #[error("no evaluable candidate in any outer iteration")]
    NoCandidate,
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
