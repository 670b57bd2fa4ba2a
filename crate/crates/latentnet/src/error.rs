use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{family} support violated: value {value} at {location}")]
    Support {
        family: String,
        value: f64,
        location: String,
    },

    #[error("value {value} outside the image of the {family} mean link")]
    MeanImage { family: String, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("node index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate node index {0} in block specification")]
    DuplicateIndex(usize),

    #[error("degenerate network: all entries are zero, cannot set the SVT threshold")]
    DegenerateNetwork,

    #[error("initialization infeasible: no thresholded entry lies inside the mean image")]
    InitInfeasible,

    #[error("trimming too aggressive: the adaptive interval is empty; reduce gamma")]
    TrimmingTooAggressive,

    #[error("information matrix singular at node {0}")]
    SingularInformation(usize),

    #[error("non-finite loss at the initial state")]
    NonFiniteStart,

    #[error("node labels do not match between fits: {0}")]
    LabelMismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    /// 2 = data/validation, 3 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateNetwork
            | Error::InitInfeasible
            | Error::TrimmingTooAggressive
            | Error::SingularInformation(_)
            | Error::NonFiniteStart => 3,
            _ => 2,
        }
    }
}
