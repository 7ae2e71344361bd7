use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code distance {0}: must be odd and within 3..=15")]
    InvalidDistance(usize),
    #[error("unknown qubit id {0}")]
    UnknownQubit(usize),
    #[error("probability out of range: {name} = {value}")]
    ProbabilityOutOfRange { name: String, value: f64 },
    #[error("invalid profile parameter: {0}")]
    InvalidProfile(String),
    #[error("profile does not cover the lattice: {0}")]
    ProfileMismatch(String),
    #[error("pair ({0}, {1}) is not groupable")]
    NotGroupable(usize, usize),
    #[error("modality {0}")]
    InvalidModality(String),
    #[error("incomplete assignment: {0}")]
    IncompleteAssignment(String),
    #[error("schedule inconsistent with lattice: {0}")]
    ScheduleMismatch(String),
    #[error("search space too large: {0} configurations")]
    SearchSpaceTooLarge(u128),
    #[error("no feasible configuration with tau <= {0}")]
    NoFeasibleSchedule(usize),
    #[error("circuit parse error at line {line}: {msg}")]
    CircuitParse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
