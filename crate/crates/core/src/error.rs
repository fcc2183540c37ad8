use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or input violated an operation's precondition.
    InvalidInput(&'static str),
    /// A model parameter fell outside its admissible range.
    OutOfBounds {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// Label propagation did not reach a stable labeling within the cap.
    Convergence { rounds: usize },
    /// A statistic is undefined for the given data (e.g. zero variance).
    Degenerate(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::OutOfBounds { name, value, lo, hi } => {
                write!(f, "{name} = {value} outside [{lo}, {hi}]")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Convergence { rounds } => {
                write!(f, "label propagation did not converge after {rounds} rounds")
            }
            Error::Degenerate(what) => write!(f, "undefined: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
