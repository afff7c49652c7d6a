use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GwError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent ring data: {0}")]
    Inconsistent(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("invalid curve class {0}")]
    InvalidCurveClass(String),

    #[error("class is not a homogeneous divisor")]
    NotADivisor,

    #[error("splitting relation does not balance: codimensions sum to {have}, need {need}")]
    Balance { have: i64, need: i64 },

    #[error("unknown invariant {0} has zero coefficient in the chosen relation")]
    ZeroCoefficient(String),

    #[error("recursion re-entered {0} while it was being computed")]
    Cycle(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("memo conflict for {key}: stored {stored}, computed {computed}")]
    Conflict {
        key: String,
        stored: String,
        computed: String,
    },

    #[error("cache: {0}")]
    Cache(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for GwError {
    fn from(e: std::io::Error) -> Self {
        GwError::Io(e.to_string())
    }
}

pub type Result<T, E = GwError> = std::result::Result<T, E>;
