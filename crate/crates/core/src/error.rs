use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph side sizes must be positive (got n_u = {n_u}, n_v = {n_v})")]
    EmptySide { n_u: usize, n_v: usize },

    #[error("edge ({i}, {j}) out of range for a {n_u} x {n_v} bipartite graph")]
    EdgeOutOfRange {
        i: usize,
        j: usize,
        n_u: usize,
        n_v: usize,
    },

    #[error("planted size k = {k} exceeds side size n = {n}")]
    PlantedTooLarge { k: usize, n: usize },

    #[error("edge probability {0} outside [0, 1]")]
    BadProbability(f64),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("instance too large for exact search: smaller side has {size} vertices, limit is {limit}")]
    InstanceTooLarge { size: usize, limit: usize },

    #[error("tail bound requires tau >= 2 (got {0})")]
    TauTooSmall(f64),

    #[error("negative-correlation bound requires -1 < rho < 0 (got {0})")]
    BadCorrelation(f64),

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("relaxation size k must be positive (got {0})")]
    NonPositiveK(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix has eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("malformed SDP problem: {0}")]
    MalformedProblem(String),

    #[error("degenerate shifted vector for vertex {0}")]
    DegenerateVector(usize),

    #[error("biclique construction precondition failed: {0}")]
    ExtractionPrecondition(String),

    #[error("experiment spec: {0}")]
    Spec(String),

    #[error("I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
